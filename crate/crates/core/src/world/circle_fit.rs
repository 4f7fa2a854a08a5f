use thiserror::Error;

use crate::apf::Obstacle;
use crate::geom::Vec2;
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum FitError {
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("points are collinear")]
    Collinear,
}

/// Algebraic (Kåsa) least-squares circle fit: minimizes
/// `Σ (x² + y² + D·x + E·y + F)²` over `(D, E, F)`. Points are centered on
/// their mean first for conditioning.
pub fn fit_circle(points: &[Vec2]) -> Result<Obstacle, FitError> {
    if points.len() < 3 {
        return Err(FitError::TooFewPoints(points.len()));
    }
    let n = points.len() as f64;
    let mean = points.iter().fold(Vec2::ZERO, |a, p| a + *p) * (1.0 / n);
    let centered: Vec<Vec2> = points.iter().map(|p| *p - mean).collect();

    // collinear iff the scatter matrix is rank one
    let (sxx, syy, sxy) = centered
        .iter()
        .fold((0.0, 0.0, 0.0), |(a, b, c), p| (a + p.x * p.x, b + p.y * p.y, c + p.x * p.y));
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    if tr == 0.0 || det <= 1e-12 * tr * tr {
        return Err(FitError::Collinear);
    }

    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for p in &centered {
        let row = [p.x, p.y, 1.0];
        let rhs = -(p.x * p.x + p.y * p.y);
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * rhs;
        }
    }
    let [d, e, f] = linalg::solve(&ata, &atb).ok_or(FitError::Collinear)?;
    let c = Vec2::new(-d / 2.0, -e / 2.0);
    let r2 = c.norm_sq() - f;
    if !(r2 > 0.0) || !r2.is_finite() {
        return Err(FitError::Collinear);
    }
    Ok(Obstacle::new(c + mean, r2.sqrt()))
}
