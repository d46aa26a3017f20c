//! Rejection sampling of admissible pointed directions.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{MetricSpec, PointedDirection, SignatureHint};

/// Sampling boxes and the admissibility slack demanded from every domain
/// inequality (keeps finite-difference stencils and homothety probes
/// inside the open cone).
#[derive(Debug, Clone)]
pub struct SampleBoxes {
    pub x: Vec<(f64, f64)>,
    pub y: Vec<(f64, f64)>,
    pub min_slack: f64,
    /// Directions shorter than this are rejected (keeps (-1)-homogeneous
    /// tensors and high-order derivative scales bounded).
    pub min_y_norm: f64,
}

impl SampleBoxes {
    /// Defaults: base points in `[-1, 1]^n`; directions shaped to the
    /// signature hint (a forward cone box for Lorentz metrics).
    pub fn for_metric(m: &MetricSpec) -> Self {
        let n = m.dim();
        let x = vec![(-1.0, 1.0); n];
        let y = match m.signature_hint() {
            Some(SignatureHint::Lorentz) => {
                let mut y = vec![(-0.5, 0.5); n];
                y[0] = (0.8, 2.0);
                y
            }
            _ => vec![(-1.5, 1.5); n],
        };
        SampleBoxes {
            x,
            y,
            min_slack: 0.05,
            min_y_norm: 0.3,
        }
    }
}

const MAX_REJECTIONS: usize = 1000;

fn draw_in(rng: &mut ChaCha8Rng, boxes: &[(f64, f64)]) -> Vec<f64> {
    boxes.iter().map(|(a, b)| rng.gen_range(*a..*b)).collect()
}

fn slack_admissible(
    m: &MetricSpec,
    x: &[f64],
    y: &[f64],
    slack: f64,
    min_y_norm: f64,
) -> Result<bool> {
    if y.iter().map(|v| v * v).sum::<f64>() < min_y_norm * min_y_norm {
        return Ok(false);
    }
    for ineq in m.domain() {
        match ineq.eval::<f64>(x, y) {
            Ok(v) if v > slack => {}
            Ok(_) => return Ok(false),
            Err(_) => return Ok(false),
        }
    }
    Ok(true)
}

/// Draw one admissible pointed direction; errors after 1000 consecutive
/// rejections.
pub fn draw(m: &MetricSpec, boxes: &SampleBoxes, rng: &mut ChaCha8Rng) -> Result<PointedDirection> {
    for _ in 0..MAX_REJECTIONS {
        let x = draw_in(rng, &boxes.x);
        let y = draw_in(rng, &boxes.y);
        if slack_admissible(m, &x, &y, boxes.min_slack, boxes.min_y_norm)? {
            return Ok(PointedDirection {
                x,
                y,
                admissible: true,
            });
        }
    }
    Err(Error::SamplerExhausted {
        rejections: MAX_REJECTIONS,
    })
}

/// Draw a batch of admissible samples.
pub fn draw_many(
    m: &MetricSpec,
    boxes: &SampleBoxes,
    rng: &mut ChaCha8Rng,
    count: usize,
) -> Result<Vec<PointedDirection>> {
    (0..count).map(|_| draw(m, boxes, rng)).collect()
}

/// Draw an admissible direction at a fixed base point.
pub fn draw_direction_at(
    m: &MetricSpec,
    boxes: &SampleBoxes,
    x: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    for _ in 0..MAX_REJECTIONS {
        let y = draw_in(rng, &boxes.y);
        if slack_admissible(m, x, &y, boxes.min_slack, boxes.min_y_norm)? {
            return Ok(y);
        }
    }
    Err(Error::SamplerExhausted {
        rejections: MAX_REJECTIONS,
    })
}

/// Draw an arbitrary (not necessarily admissible) tangent vector.
pub fn draw_vector(boxes: &SampleBoxes, rng: &mut ChaCha8Rng) -> Vec<f64> {
    draw_in(rng, &boxes.y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn lorentz_sampling_lands_in_the_cone() {
        let m = MetricSpec::minkowski(4).unwrap();
        let boxes = SampleBoxes::for_metric(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let samples = draw_many(&m, &boxes, &mut rng, 50).unwrap();
        for s in samples {
            assert!(m.admissible(&s.x, &s.y).unwrap());
        }
    }

    #[test]
    fn sampler_is_deterministic() {
        let m = MetricSpec::euclidean(2).unwrap();
        let boxes = SampleBoxes::for_metric(&m);
        let a = draw_many(&m, &boxes, &mut ChaCha8Rng::seed_from_u64(3), 10).unwrap();
        let b = draw_many(&m, &boxes, &mut ChaCha8Rng::seed_from_u64(3), 10).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn impossible_domain_exhausts() {
        // a metric whose domain has no admissible point in the default box
        let l = crate::expr::parse("y0^2 + y1^2", 2).unwrap();
        let dom = vec![crate::expr::parse("y0 - 100", 2).unwrap()];
        let m = crate::geometry::MetricSpec::custom(
            2,
            l,
            dom,
            crate::expr::Params::new(),
            None,
        )
        .unwrap();
        let boxes = SampleBoxes::for_metric(&m);
        let err = draw(&m, &boxes, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(matches!(err, Err(Error::SamplerExhausted { .. })));
    }
}
