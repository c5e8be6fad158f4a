use alloc::string::String;

/// Parameter tuple of one verified inequality instance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EstimateParams {
    pub label: String,
    pub gamma: Option<f64>,
    pub d: Option<usize>,
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    /// Lebesgue exponent; `f64::INFINITY` for `L^∞`.
    pub p: Option<f64>,
}

impl EstimateParams {
    pub fn labeled(label: impl Into<String>) -> Self {
        EstimateParams {
            label: label.into(),
            ..Default::default()
        }
    }
}

/// One verified inequality instance: `pass ⇔ normalized_constant ≤ threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub params: EstimateParams,
    pub measured_sup: f64,
    pub normalized_constant: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl EstimateReport {
    pub fn new(params: EstimateParams, measured_sup: f64, normalized_constant: f64, threshold: f64) -> Self {
        EstimateReport {
            params,
            measured_sup,
            normalized_constant,
            threshold,
            pass: normalized_constant.is_finite() && normalized_constant <= threshold,
        }
    }
}
