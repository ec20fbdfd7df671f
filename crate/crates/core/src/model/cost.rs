use super::catalog::TechnologyParams;
use super::ModelError;

/// Capital recovery factor `((1+r)^n r) / ((1+r)^n - 1)`.
pub fn annuity(rate: f64, years: u32) -> Result<f64, ModelError> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(ModelError::Parameter(format!(
            "interest rate must lie in (0, 1), got {rate}"
        )));
    }
    if years == 0 {
        return Err(ModelError::Parameter("lifetime must be at least one year".into()));
    }
    let growth = (1.0 + rate).powi(years as i32);
    Ok(growth * rate / (growth - 1.0))
}

/// Yearly cost of one unit of capacity: `capex * annuity + fixed_om`.
pub fn annualized_cost(params: &TechnologyParams) -> Result<f64, ModelError> {
    Ok(params.capex * annuity(params.interest_rate, params.lifetime_years)? + params.fixed_om)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_year_annuity_is_one_plus_rate() {
        assert!((annuity(0.05, 1).unwrap() - 1.05).abs() < 1e-15);
    }

    #[test]
    fn reference_values() {
        assert!((annuity(0.07, 25).unwrap() - 0.085_810_517).abs() < 1e-8);
        let p = TechnologyParams {
            capex: 450.0,
            fixed_om: 9.0,
            lifetime_years: 25,
            interest_rate: 0.07,
            ..TechnologyParams::named("pv")
        };
        assert!((annualized_cost(&p).unwrap() - 47.614_733).abs() < 1e-5);
    }

    #[test]
    fn small_rate_tends_to_straight_line() {
        let a = annuity(1e-9, 10).unwrap();
        assert!((a - 0.1).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(annuity(0.0, 10).is_err());
        assert!(annuity(-0.1, 10).is_err());
        assert!(annuity(1.0, 10).is_err());
        assert!(annuity(0.05, 0).is_err());
    }
}
