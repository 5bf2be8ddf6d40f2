use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Aabb, Domain, DomainKind};
use crate::error::{QhError, Result};
use crate::geom::Point;

/// JSON form of a domain:
/// `{"kind": "...", "params": {...}, "window": [[lo], [hi]], "delta_floor": x}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: String,
    #[serde(default)]
    pub params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[Point; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_floor: Option<f64>,
}

fn param<T: for<'de> Deserialize<'de>>(params: &Value, key: &str, kind: &str) -> Result<T> {
    let v = params
        .get(key)
        .ok_or_else(|| QhError::Config(format!("{kind}: missing parameter `{key}`")))?;
    serde_json::from_value(v.clone())
        .map_err(|e| QhError::Config(format!("{kind}: bad parameter `{key}`: {e}")))
}

impl DomainSpec {
    pub fn build(&self) -> Result<Domain> {
        let p = &self.params;
        let k = self.kind.as_str();
        let window = self.window.map(|[lo, hi]| Aabb::new(lo, hi)).transpose()?;
        let mut domain = match k {
            "ball" => Domain::ball(param(p, "center", k)?, param(p, "radius", k)?)?,
            "half_space" => {
                let window = window.ok_or_else(|| {
                    QhError::Config("half_space: a window is required".into())
                })?;
                let axis: Option<usize> = p.get("axis").map(|_| param(p, "axis", k)).transpose()?;
                let offset: Option<f64> =
                    p.get("offset").map(|_| param(p, "offset", k)).transpose()?;
                let dim = window.dim();
                Domain::half_space(dim, axis.unwrap_or(dim - 1), offset.unwrap_or(0.0), window)?
            }
            "punctured_ball" => Domain::punctured_ball(
                param(p, "center", k)?,
                param(p, "radius", k)?,
                param(p, "puncture", k)?,
            )?,
            "slit_disk" => {
                let [a, b]: [Point; 2] = param(p, "slit", k)?;
                Domain::slit_disk(param(p, "center", k)?, param(p, "radius", k)?, a, b)?
            }
            "custom" => Domain::custom(param(p, "boundary", k)?)?,
            other => return Err(QhError::Config(format!("unknown domain kind `{other}`"))),
        };
        if let Some(w) = window {
            domain = domain.with_window(w)?;
        }
        if let Some(f) = self.delta_floor {
            domain = domain.with_delta_floor(f)?;
        }
        Ok(domain)
    }
}

impl Domain {
    pub fn from_spec(spec: &DomainSpec) -> Result<Self> {
        spec.build()
    }

    pub fn to_spec(&self) -> DomainSpec {
        let (kind, params) = match &self.kind {
            DomainKind::Ball { center, radius } => {
                ("ball", json!({"center": center, "radius": radius}))
            }
            DomainKind::HalfSpace { axis, offset, .. } => {
                ("half_space", json!({"axis": axis, "offset": offset}))
            }
            DomainKind::PuncturedBall { center, radius, puncture } => (
                "punctured_ball",
                json!({"center": center, "radius": radius, "puncture": puncture}),
            ),
            DomainKind::SlitDisk { center, radius, slit } => (
                "slit_disk",
                json!({"center": center, "radius": radius, "slit": [slit.0, slit.1]}),
            ),
            DomainKind::Custom(b) => ("custom", json!({"boundary": b.points()})),
        };
        DomainSpec {
            kind: kind.to_string(),
            params,
            window: Some([self.window.lo, self.window.hi]),
            delta_floor: Some(self.delta_floor),
        }
    }
}
