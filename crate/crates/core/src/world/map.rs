use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::apf::{d_boundary, Obstacle};
use crate::geom::Vec2;
use crate::random::RngStream;

pub const MAP_FORMAT_VERSION: u32 = 1;

/// Minimum distance from start and target to every inflated obstacle.
pub const ENDPOINT_CLEARANCE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("obstacle {0} is not fully inside the {1} m extent")]
    OutsideExtent(usize, f64),
    #[error("{which} at {at:?} is only {clearance:.3} m from obstacle {obstacle}")]
    Clearance {
        which: &'static str,
        at: Vec2,
        obstacle: usize,
        clearance: f64,
    },
    #[error("{which} at {at:?} lies outside the extent")]
    EndpointOutside { which: &'static str, at: Vec2 },
    #[error("map text line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported map format version {0}")]
    Version(u32),
    #[error("no valid start/target pair found in {0} attempts")]
    NoEndpoints(usize),
}

/// Square world `[0, extent]²` with circular obstacles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldMap {
    pub extent: f64,
    pub obstacles: Vec<Obstacle>,
    pub start: Vec2,
    pub target: Vec2,
}

impl WorldMap {
    pub fn new(extent: f64, obstacles: Vec<Obstacle>, start: Vec2, target: Vec2) -> Self {
        Self {
            extent,
            obstacles,
            start,
            target,
        }
    }

    pub fn empty(extent: f64, start: Vec2, target: Vec2) -> Self {
        Self::new(extent, Vec::new(), start, target)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        (0.0..=self.extent).contains(&p.x) && (0.0..=self.extent).contains(&p.y)
    }

    /// Checks obstacle containment and endpoint clearance for a drone of
    /// radius `r_drone`.
    pub fn validate(&self, r_drone: f64) -> Result<(), MapError> {
        for (i, o) in self.obstacles.iter().enumerate() {
            let c = o.center;
            let inside = c.x - o.radius >= 0.0
                && c.y - o.radius >= 0.0
                && c.x + o.radius <= self.extent
                && c.y + o.radius <= self.extent;
            if !inside {
                return Err(MapError::OutsideExtent(i, self.extent));
            }
        }
        for (which, at) in [("start", self.start), ("target", self.target)] {
            if !self.contains(at) {
                return Err(MapError::EndpointOutside { which, at });
            }
            for (i, o) in self.obstacles.iter().enumerate() {
                let clearance = d_boundary(at, o, r_drone);
                if clearance < ENDPOINT_CLEARANCE {
                    return Err(MapError::Clearance {
                        which,
                        at,
                        obstacle: i,
                        clearance,
                    });
                }
            }
        }
        Ok(())
    }

    /// Same obstacles with a new start/target pair.
    pub fn with_endpoints(&self, start: Vec2, target: Vec2) -> Self {
        Self {
            start,
            target,
            ..self.clone()
        }
    }

    /// Text form:
    ///
    /// ```text
    /// # seeker map
    /// version 1
    /// extent 10
    /// start 1 1
    /// target 9 9
    /// obstacle 5 5 0.5
    /// ```
    ///
    /// Blank lines and lines starting with `#` are ignored.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# seeker map: extent (m), start/target (x y), obstacle (cx cy r)\n");
        let _ = writeln!(s, "version {MAP_FORMAT_VERSION}");
        let _ = writeln!(s, "extent {}", self.extent);
        let _ = writeln!(s, "start {} {}", self.start.x, self.start.y);
        let _ = writeln!(s, "target {} {}", self.target.x, self.target.y);
        for o in &self.obstacles {
            let _ = writeln!(s, "obstacle {} {} {}", o.center.x, o.center.y, o.radius);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, MapError> {
        let mut extent = None;
        let mut start = None;
        let mut target = None;
        let mut obstacles = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            let mut parts = raw.split_whitespace();
            let key = parts.next().unwrap_or_default();
            let nums: Vec<f64> = parts
                .map(|p| {
                    p.parse::<f64>().map_err(|e| MapError::Parse {
                        line,
                        msg: format!("{p:?}: {e}"),
                    })
                })
                .collect::<Result<_, _>>()?;
            let want = |k: usize| -> Result<(), MapError> {
                if nums.len() == k {
                    Ok(())
                } else {
                    Err(MapError::Parse {
                        line,
                        msg: format!("{key} expects {k} numbers, got {}", nums.len()),
                    })
                }
            };
            match key {
                "version" => {
                    want(1)?;
                    let v = nums[0] as u32;
                    if v != MAP_FORMAT_VERSION {
                        return Err(MapError::Version(v));
                    }
                }
                "extent" => {
                    want(1)?;
                    extent = Some(nums[0]);
                }
                "start" => {
                    want(2)?;
                    start = Some(Vec2::new(nums[0], nums[1]));
                }
                "target" => {
                    want(2)?;
                    target = Some(Vec2::new(nums[0], nums[1]));
                }
                "obstacle" => {
                    want(3)?;
                    if !(nums[2] > 0.0) {
                        return Err(MapError::Parse {
                            line,
                            msg: "obstacle radius must be positive".into(),
                        });
                    }
                    obstacles.push(Obstacle::new(Vec2::new(nums[0], nums[1]), nums[2]));
                }
                other => {
                    return Err(MapError::Parse {
                        line,
                        msg: format!("unknown key {other:?}"),
                    })
                }
            }
        }
        let missing = |what: &str| MapError::Parse {
            line: 0,
            msg: format!("missing {what}"),
        };
        Ok(Self {
            extent: extent.ok_or_else(|| missing("extent"))?,
            start: start.ok_or_else(|| missing("start"))?,
            target: target.ok_or_else(|| missing("target"))?,
            obstacles,
        })
    }
}

/// Clearance of `p` from every inflated obstacle is at least
/// [`ENDPOINT_CLEARANCE`].
pub fn endpoint_clear(p: Vec2, obstacles: &[Obstacle], r_drone: f64) -> bool {
    obstacles
        .iter()
        .all(|o| d_boundary(p, o, r_drone) >= ENDPOINT_CLEARANCE)
}

/// Draws a start/target pair at least `min_separation` apart, each with
/// endpoint clearance and `margin` from the map edge.
pub fn sample_endpoints(
    extent: f64,
    obstacles: &[Obstacle],
    r_drone: f64,
    min_separation: f64,
    margin: f64,
    rng: &mut RngStream,
) -> Result<(Vec2, Vec2), MapError> {
    const ATTEMPTS: usize = 10_000;
    let draw = |rng: &mut RngStream| -> Option<Vec2> {
        let x = rng.uniform(margin, extent - margin).ok()?;
        let y = rng.uniform(margin, extent - margin).ok()?;
        let p = Vec2::new(x, y);
        endpoint_clear(p, obstacles, r_drone).then_some(p)
    };
    for _ in 0..ATTEMPTS {
        let (Some(s), Some(t)) = (draw(rng), draw(rng)) else {
            continue;
        };
        if s.distance(t) >= min_separation {
            return Ok((s, t));
        }
    }
    Err(MapError::NoEndpoints(ATTEMPTS))
}
