//! Intervention spending.

use crate::error::{Error, Result};
use crate::interventions::vaccination::VaccinePolicy;

/// Tests and doses are charged when administered.
#[derive(Debug, Clone, PartialEq)]
pub struct CostLedger {
    pub test_price: f64,
    pub dose_price: f64,
    pub tests: u64,
    pub doses: u64,
    /// Running total at the end of each recorded step.
    pub cumulative: Vec<f64>,
}

impl CostLedger {
    pub fn new(test_price: f64, dose_price: f64) -> Self {
        Self {
            test_price,
            dose_price,
            tests: 0,
            doses: 0,
            cumulative: Vec::new(),
        }
    }

    pub fn add_tests(&mut self, n: u64) {
        self.tests += n;
    }

    pub fn add_doses(&mut self, n: u64) {
        self.doses += n;
    }

    pub fn close_step(&mut self) -> f64 {
        let t = total_cost(self);
        self.cumulative.push(t);
        t
    }
}

pub fn total_cost(ledger: &CostLedger) -> f64 {
    ledger.tests as f64 * ledger.test_price + ledger.doses as f64 * ledger.dose_price
}

/// Days on which doses are produced within a `horizon`-step run (step 0 only
/// seeds, so production starts at `max(start, 1)`).
pub fn active_vaccination_days(start_date: u32, horizon: u32) -> u32 {
    horizon.saturating_sub(start_date.max(1))
}

/// `base` with its daily production set so that producing every day of the
/// horizon costs at most `budget`.
pub fn budget_scaled_policy(budget: f64, base: &VaccinePolicy, horizon: u32) -> Result<VaccinePolicy> {
    if !(budget >= 0.0) {
        return Err(Error::config("vaccine_budget", "must be non-negative"));
    }
    if base.price <= 0.0 {
        return Err(Error::config("vaccine_price", "must be positive to derive production from a budget"));
    }
    let days = active_vaccination_days(base.start_date, horizon);
    let daily_prod = if days == 0 {
        0
    } else {
        (budget / (base.price * f64::from(days))).floor() as u64
    };
    Ok(VaccinePolicy {
        daily_prod,
        ..base.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::config::{parse_config, tests::BASELINE};
    use proptest::prelude::*;

    fn base() -> VaccinePolicy {
        VaccinePolicy::from_config(&parse_config(BASELINE).unwrap())
    }

    #[test]
    fn empty_ledger_costs_nothing() {
        assert_eq!(total_cost(&CostLedger::new(5.0, 20.0)), 0.0);
    }

    #[test]
    fn thousand_tests() {
        let mut l = CostLedger::new(5.0, 20.0);
        l.add_tests(1000);
        assert_eq!(total_cost(&l), 5000.0);
    }

    #[test]
    fn budget_examples() {
        assert_eq!(budget_scaled_policy(0.0, &base(), 180).unwrap().daily_prod, 0);
        assert_eq!(active_vaccination_days(10, 180), 170);
        assert_eq!(budget_scaled_policy(420_000.0, &base(), 180).unwrap().daily_prod, 123);
        let mut free = base();
        free.price = 0.0;
        assert!(budget_scaled_policy(1.0, &free, 180).is_err());
    }

    proptest! {
        #[test]
        fn worst_case_spend_within_budget(budget in 0.0f64..5e6, start in 0u32..60, horizon in 1u32..400) {
            let mut b = base();
            b.start_date = start;
            let p = budget_scaled_policy(budget, &b, horizon).unwrap();
            let spend = p.daily_prod as f64 * b.price * f64::from(active_vaccination_days(start, horizon));
            prop_assert!(spend <= budget);
        }

        #[test]
        fn doubling_budget_roughly_doubles_production(budget in 0.0f64..5e6) {
            let single = budget_scaled_policy(budget, &base(), 180).unwrap().daily_prod;
            let double = budget_scaled_policy(2.0 * budget, &base(), 180).unwrap().daily_prod;
            prop_assert!(double == 2 * single || double == 2 * single + 1);
        }

        #[test]
        fn total_is_exact_for_integer_prices(tests in 0u64..10_000_000, doses in 0u64..10_000_000) {
            let mut l = CostLedger::new(5.0, 20.0);
            l.add_tests(tests);
            l.add_doses(doses);
            prop_assert_eq!(total_cost(&l), (5 * tests + 20 * doses) as f64);
        }
    }
}
