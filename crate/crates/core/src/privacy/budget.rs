//! (ε, δ)-DP and ρ-zCDP budgets, converted with `ε = sqrt(2ρ·ln(1/δ))`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::Domain(format!("epsilon must be finite and >= 0, got {epsilon}")));
        }
        check_delta(delta)?;
        Ok(PrivacyBudget { epsilon, delta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZcdpBudget {
    pub rho: f64,
}

impl ZcdpBudget {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::Domain(format!("rho must be positive, got {rho}")));
        }
        Ok(ZcdpBudget { rho })
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// The ρ for which ρ-zCDP implies the given (ε, δ)-DP: `ρ = ε² / (2·ln(1/δ))`.
pub fn zcdp_from_dp(budget: PrivacyBudget) -> Result<ZcdpBudget> {
    check_delta(budget.delta)?;
    ZcdpBudget::new(budget.epsilon * budget.epsilon / (2.0 * (1.0 / budget.delta).ln()))
}

/// The ε implied by ρ-zCDP at a given δ.
pub fn dp_from_zcdp(rho: ZcdpBudget, delta: f64) -> Result<PrivacyBudget> {
    check_delta(delta)?;
    PrivacyBudget::new((2.0 * rho.rho * (1.0 / delta).ln()).sqrt(), delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_value_conversion() {
        let rho = zcdp_from_dp(PrivacyBudget::new(0.94, 1e-4).unwrap()).unwrap();
        assert!((rho.rho - 0.04797).abs() < 5e-6, "{}", rho.rho);
        let back = dp_from_zcdp(ZcdpBudget::new(0.04797).unwrap(), 1e-4).unwrap();
        assert!((back.epsilon - 0.94).abs() < 1e-4);
    }

    #[test]
    fn quadratic_homogeneity() {
        let a = zcdp_from_dp(PrivacyBudget::new(0.3, 1e-5).unwrap()).unwrap();
        let b = zcdp_from_dp(PrivacyBudget::new(0.6, 1e-5).unwrap()).unwrap();
        assert!((b.rho / a.rho - 4.0).abs() < 1e-12);
    }

    #[test]
    fn simple_inverse_values() {
        let e = dp_from_zcdp(ZcdpBudget::new(0.5).unwrap(), (-1f64).exp()).unwrap();
        assert!((e.epsilon - 1.0).abs() < 1e-15);
        let tiny = dp_from_zcdp(ZcdpBudget::new(1e-300).unwrap(), 0.01).unwrap();
        assert!(tiny.epsilon < 1e-149);
    }

    #[test]
    fn delta_domain() {
        assert!(PrivacyBudget::new(1.0, 1.0).is_err());
        assert!(dp_from_zcdp(ZcdpBudget::new(1.0).unwrap(), 1.5).is_err());
        assert!(ZcdpBudget::new(0.0).is_err());
    }
}
