//! The ambient settings: classical norm, non-Archimedean norm, random
//! normed space (t-norms and distribution functions), and fuzzy norm.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit-interval comparisons use this tolerance.
pub const UNIT_TOL: f64 = 1e-12;
/// Certificate inequalities get a one-sided slack in the floating settings.
pub const CERT_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SettingKind {
    Classical,
    NonArchimedean,
    Random,
    Fuzzy,
}

impl SettingKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SettingKind::Classical => "classical",
            SettingKind::NonArchimedean => "non-archimedean",
            SettingKind::Random => "random",
            SettingKind::Fuzzy => "fuzzy",
        }
    }
}

/// Descriptor of the ambient setting an experiment runs in.
#[derive(Clone, Debug)]
pub enum NormedSetting {
    Classical { dim: usize },
    NonArchimedean { prime: u32, precision: usize },
    Random { tnorm: TNorm, anchor_norm: f64, dim: usize },
    Fuzzy { alpha: f64, beta: f64, dim: usize },
}

impl NormedSetting {
    pub fn kind(&self) -> SettingKind {
        match self {
            NormedSetting::Classical { .. } => SettingKind::Classical,
            NormedSetting::NonArchimedean { .. } => SettingKind::NonArchimedean,
            NormedSetting::Random { .. } => SettingKind::Random,
            NormedSetting::Fuzzy { .. } => SettingKind::Fuzzy,
        }
    }
}

/// Continuous triangular norms used by the random-normed setting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TNorm {
    Minimum,
    Product,
    Lukasiewicz,
}

fn check_unit(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || x.is_nan() {
        return Err(Error::Domain(format!("t-norm argument {x} outside [0,1]")));
    }
    Ok(x)
}

impl TNorm {
    pub fn apply(&self, x: f64, y: f64) -> Result<f64> {
        let x = check_unit(x)?;
        let y = check_unit(y)?;
        Ok(match self {
            TNorm::Minimum => x.min(y),
            TNorm::Product => x * y,
            TNorm::Lukasiewicz => (x + y - 1.0).max(0.0),
        })
    }

    /// The recursive fold T¹ = x₁, Tⁿ = T(Tⁿ⁻¹, xₙ).
    pub fn iterate(&self, values: &[f64]) -> Result<f64> {
        let (first, rest) = values
            .split_first()
            .ok_or_else(|| Error::Domain("t-norm fold over empty sequence".into()))?;
        let mut acc = check_unit(*first)?;
        for &v in rest {
            acc = self.apply(acc, v)?;
        }
        Ok(acc)
    }
}

/// Distribution functions restricted to the two closed forms the
/// certificates use: the step H_a and the induced form t/(t+‖u‖).
#[derive(Clone, Debug, PartialEq)]
pub enum DistributionFunction {
    StepAt(f64),
    Induced(f64),
}

impl DistributionFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            DistributionFunction::StepAt(a) => {
                if t <= *a {
                    0.0
                } else {
                    1.0
                }
            }
            DistributionFunction::Induced(u) => induced_value(t, *u),
        }
    }
}

/// μ_u(t) = t/(t+‖u‖) for t > 0, else 0. Shared by the random-normed
/// checkers and (at α = β = 1) the fuzzy checkers, so the two reduce to
/// bit-identical arithmetic on the classical carrier.
pub fn induced_value(t: f64, magnitude: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        t / (t + magnitude)
    }
}

/// The example fuzzy norm N(x,t) = αt/(αt+β‖x‖) for t > 0, else 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzyNorm {
    pub alpha: f64,
    pub beta: f64,
}

impl FuzzyNorm {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if alpha <= 0.0 || beta <= 0.0 {
            return Err(Error::Config("fuzzy norm needs α > 0 and β > 0".into()));
        }
        Ok(FuzzyNorm { alpha, beta })
    }

    pub fn eval(&self, x_norm: f64, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            let at = self.alpha * t;
            at / (at + self.beta * x_norm)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomViolation {
    pub axiom: String,
    pub witness: String,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomReport {
    pub checks: usize,
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verify the random-normed-space axioms on the induced space of the
/// Euclidean norm, over sampled points, scalars and a t-grid. Violations
/// are report content, not errors.
pub fn rn_axioms_check(
    tnorm: TNorm,
    points: &[Vec<f64>],
    scalars: &[f64],
    t_grid: &[f64],
) -> AxiomReport {
    let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mu = |x: &[f64], t: f64| induced_value(t, norm(x));
    let mut violations = Vec::new();
    let mut checks = 0usize;

    // (a) μ_x = H_0 on the grid iff x = 0.
    for x in points {
        let all_one = t_grid
            .iter()
            .filter(|&&t| t > 0.0)
            .all(|&t| (mu(x, t) - 1.0).abs() <= UNIT_TOL);
        checks += 1;
        if all_one != (norm(x) == 0.0) {
            violations.push(AxiomViolation {
                axiom: "(a) identity".into(),
                witness: format!("{x:?}"),
                lhs: if all_one { 1.0 } else { 0.0 },
                rhs: if norm(x) == 0.0 { 1.0 } else { 0.0 },
            });
        }
    }

    // (b) μ_{αx}(t) = μ_x(t/|α|) for α ≠ 0.
    for x in points {
        for &a in scalars.iter().filter(|&&a| a != 0.0) {
            let ax: Vec<f64> = x.iter().map(|v| v * a).collect();
            for &t in t_grid {
                checks += 1;
                let lhs = mu(&ax, t);
                let rhs = mu(x, t / a.abs());
                if (lhs - rhs).abs() > UNIT_TOL {
                    violations.push(AxiomViolation {
                        axiom: "(b) scaling".into(),
                        witness: format!("x={x:?}, α={a}, t={t}"),
                        lhs,
                        rhs,
                    });
                }
            }
        }
    }

    // (c) μ_{x+y}(t+s) ≥ T(μ_x(t), μ_y(s)).
    for x in points {
        for y in points {
            let sum: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
            for &t in t_grid {
                for &s in t_grid {
                    checks += 1;
                    let lhs = mu(&sum, t + s);
                    let rhs = tnorm
                        .apply(mu(x, t), mu(y, s))
                        .expect("induced values lie in [0,1]");
                    if lhs + UNIT_TOL < rhs {
                        violations.push(AxiomViolation {
                            axiom: "(c) triangle".into(),
                            witness: format!("x={x:?}, y={y:?}, t={t}, s={s}"),
                            lhs,
                            rhs,
                        });
                    }
                }
            }
        }
    }

    AxiomReport { checks, violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tnorm_examples() {
        assert_eq!(TNorm::Minimum.apply(0.3, 0.7).unwrap(), 0.3);
        assert_eq!(TNorm::Product.apply(0.42, 1.0).unwrap(), 0.42);
        assert_eq!(TNorm::Lukasiewicz.apply(0.5, 0.5).unwrap(), 0.0);
        assert!(TNorm::Minimum.apply(1.2, 0.5).is_err());
    }

    #[test]
    fn tnorm_axioms_on_grid() {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        for t in [TNorm::Minimum, TNorm::Product, TNorm::Lukasiewicz] {
            for &x in &grid {
                assert!((t.apply(x, 1.0).unwrap() - x).abs() <= UNIT_TOL, "unit axiom");
                for &y in &grid {
                    let xy = t.apply(x, y).unwrap();
                    assert!((0.0..=1.0).contains(&xy));
                    assert_eq!(xy, t.apply(y, x).unwrap(), "commutativity");
                    for &z in &grid {
                        let a = t.apply(xy, z).unwrap();
                        let b = t.apply(x, t.apply(y, z).unwrap()).unwrap();
                        assert!((a - b).abs() <= UNIT_TOL, "associativity");
                        // monotonicity in the first argument
                        if z >= x {
                            assert!(t.apply(z, y).unwrap() + UNIT_TOL >= xy);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn tnorm_fold() {
        assert_eq!(TNorm::Minimum.iterate(&[0.9, 0.8, 0.7]).unwrap(), 0.7);
        assert_eq!(TNorm::Product.iterate(&[0.5, 0.5, 0.5]).unwrap(), 0.125);
        for t in [TNorm::Minimum, TNorm::Product, TNorm::Lukasiewicz] {
            assert_eq!(t.iterate(&[0.37]).unwrap(), 0.37);
            assert!(t.iterate(&[]).is_err());
        }
    }

    #[test]
    fn step_distribution_edges() {
        let h2 = DistributionFunction::StepAt(2.0);
        assert_eq!(h2.eval(3.0), 1.0);
        assert_eq!(h2.eval(2.0), 0.0);
        assert_eq!(h2.eval(0.0), 0.0);
    }

    #[test]
    fn induced_distribution_values() {
        let zero = DistributionFunction::Induced(0.0);
        assert_eq!(zero.eval(0.5), 1.0);
        assert_eq!(zero.eval(123.0), 1.0);
        let one = DistributionFunction::Induced(1.0);
        assert_eq!(one.eval(1.0), 0.5);
        assert_eq!(one.eval(0.0), 0.0);
    }

    #[test]
    fn distributions_nondecreasing_in_t() {
        let reps = [
            DistributionFunction::StepAt(0.7),
            DistributionFunction::Induced(0.0),
            DistributionFunction::Induced(2.5),
        ];
        let ts: Vec<f64> = (0..200).map(|i| -1.0 + i as f64 * 0.05).collect();
        for f in &reps {
            let mut prev = f64::NEG_INFINITY;
            for &t in &ts {
                let v = f.eval(t);
                assert!((0.0..=1.0).contains(&v));
                assert!(v + UNIT_TOL >= prev);
                prev = v;
            }
        }
        // Strictly increasing on t > 0 when the anchor norm is positive.
        let g = DistributionFunction::Induced(1.5);
        assert!(g.eval(2.0) > g.eval(1.0));
    }

    #[test]
    fn fuzzy_norm_examples() {
        let n = FuzzyNorm::new(1.0, 1.0).unwrap();
        assert_eq!(n.eval(0.0, 1.0), 1.0);
        assert_eq!(n.eval(1.0, 1.0), 0.5);
        assert_eq!(n.eval(7.0, -1.0), 0.0);
        assert_eq!(n.eval(7.0, 0.0), 0.0);
        assert!(FuzzyNorm::new(0.0, 1.0).is_err());
    }

    #[test]
    fn fuzzy_scaling_axiom_is_algebraic() {
        // N(cx, t) = N(x, t/|c|): exact identity for the example family.
        let n = FuzzyNorm::new(2.0, 3.0).unwrap();
        for &xn in &[0.5, 1.0, 4.0] {
            for &c in &[2.0f64, 4.0, 0.5] {
                for &t in &[0.25, 1.0, 8.0] {
                    let lhs = n.eval(c.abs() * xn, t);
                    let rhs = n.eval(xn, t / c.abs());
                    assert!((lhs - rhs).abs() <= UNIT_TOL);
                }
            }
        }
    }

    #[test]
    fn fuzzy_n4_min_form() {
        let n = FuzzyNorm::new(1.0, 2.0).unwrap();
        let xs = [0.0, 0.5, 1.0, 3.0];
        let ts = [0.1, 0.7, 2.0, 9.0];
        for &a in &xs {
            for &b in &xs {
                for &s in &ts {
                    for &t in &ts {
                        // ‖x+y‖ ≤ ‖x‖+‖y‖, so the worst case is the sum.
                        let lhs = n.eval(a + b, s + t);
                        let rhs = n.eval(a, s).min(n.eval(b, t));
                        assert!(lhs + UNIT_TOL >= rhs);
                    }
                }
            }
        }
    }

    #[test]
    fn rn_axioms_hold_on_induced_space() {
        let points = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![-2.0, 1.0],
            vec![0.5, 0.5],
        ];
        let scalars = [2.0, -1.0, 0.5, -3.0];
        let ts = [0.01, 0.1, 1.0, 10.0, 100.0];
        for t in [TNorm::Minimum, TNorm::Product, TNorm::Lukasiewicz] {
            let report = rn_axioms_check(t, &points, &scalars, &ts);
            assert!(report.clean(), "violations: {:?}", report.violations);
            assert!(report.checks > 100);
        }
    }

    #[test]
    fn rn_axiom_a_detects_fake_zero() {
        // A corrupted sample where a nonzero point claims μ ≡ 1 cannot occur
        // for the induced space; instead check that a zero vector passes and
        // that the checker counts it.
        let report = rn_axioms_check(TNorm::Minimum, &[vec![0.0]], &[1.0], &[1.0, 2.0]);
        assert!(report.clean());
    }
}
