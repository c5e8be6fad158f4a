//! Per-command parameter sets.
//!
//! Each command has a resolved parameter struct, readable from a JSON file
//! whose unknown keys are rejected, and a mirror of optional command-line
//! flags. Flags given on the command line override the file, which overrides
//! the defaults.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use clap::Args;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::LabError;

/// A Lebesgue exponent; `inf` on the command line and `"inf"` in JSON stand
/// for `L^∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent(pub f64);

impl FromStr for Exponent {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Exponent(f64::INFINITY)),
            t => t
                .parse::<f64>()
                .map(Exponent)
                .map_err(|_| format!("`{s}` is not a number or `inf`")),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str("inf")
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Exponent;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Exponent, E> {
                Ok(Exponent(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Exponent, E> {
                Ok(Exponent(v as f64))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Exponent, E> {
                Ok(Exponent(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Exponent, E> {
                v.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

pub fn exponents(list: &[Exponent]) -> Vec<f64> {
    list.iter().map(|e| e.0).collect()
}

macro_rules! params {
    (
        $(#[$doc:meta])*
        $name:ident, $args:ident {
            $( $(#[$arg:meta])* $field:ident : $ty:ty = $default:expr ),* $(,)?
        }
    ) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields, default)]
        pub struct $name {
            $( pub $field: $ty, )*
        }

        impl Default for $name {
            fn default() -> Self {
                $name { $( $field: $default, )* }
            }
        }

        #[derive(Debug, Clone, Default, Args, Serialize)]
        pub struct $args {
            $(
                $(#[$arg])*
                #[arg(long)]
                #[serde(skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }
    };
}

params! {
    SimulateParams, SimulateArgs {
        gamma: f64 = 1.5,
        n: usize = 64,
        t_end: f64 = 1.0,
        dt: f64 = 1e-3,
        /// exp_euler, etd2 or picard_slab
        method: String = "etd2".into(),
        picard_tol: f64 = 1e-10,
        picard_max_iter: usize = 20,
        collocation: usize = 4,
        /// shear, taylor_green, gevrey_random or snapshot
        initial: String = "gevrey_random".into(),
        amplitude: f64 = 0.05,
        radius: f64 = 0.3,
        seed: u64 = 1,
        /// FNS1 file holding the initial field when `initial` is `snapshot`
        initial_path: String = String::new(),
        output_every: usize = 10,
        #[arg(value_delimiter = ',')]
        q_list: Vec<Exponent> = vec![Exponent(6.0), Exponent(12.0), Exponent(f64::INFINITY)],
        /// write an FNS1 snapshot at every recorded time, not only the last
        write_snapshots: bool = false,
    }
}

params! {
    KernelTableParams, KernelTableArgs {
        gamma: f64 = 1.5,
        t: f64 = 1.0,
        d: usize = 2,
        /// heat or oseen
        kind: String = "heat".into(),
        j: usize = 1,
        m: usize = 2,
        k: usize = 0,
        alpha: f64 = 0.0,
        extent: f64 = 8.0,
        samples: usize = 64,
        /// 0 picks the dimension's default
        pad: usize = 0,
    }
}

params! {
    VerifyKernelsParams, VerifyKernelsArgs {
        gamma: f64 = 1.5,
        d: usize = 3,
        kmax: usize = 6,
        alpha: f64 = 0.0,
        /// heat or oseen
        kind: String = "oseen".into(),
        j: usize = 1,
        m: usize = 2,
        extent: f64 = 8.0,
        samples: usize = 64,
        pad: usize = 0,
    }
}

params! {
    VerifyLemmaParams, VerifyLemmaArgs {
        gamma: f64 = 1.5,
        d: usize = 2,
        kmax: usize = 4,
        alpha: f64 = 0.0,
        #[arg(value_delimiter = ',')]
        p_list: Vec<Exponent> = vec![Exponent(1.0), Exponent(2.0), Exponent(f64::INFINITY)],
        /// periodic grid points per axis; 0 picks the dimension's default
        n: usize = 0,
        spacing: f64 = 0.0,
        /// largest accepted ratio of normalized constants across p
        max_spread: f64 = 2.0,
    }
}

params! {
    RadiusParams, RadiusArgs {
        #[arg(value_delimiter = ',')]
        snapshots: Vec<String> = Vec::new(),
        floor: f64 = fns_core::analyticity::DEFAULT_FLOOR,
        /// 0 for both picks [n/8, n/3]
        band_lo: usize = 0,
        band_hi: usize = 0,
        /// initial radius; a growth fit is made when positive
        r0: f64 = 0.0,
        window_lo: f64 = 0.01,
        window_hi: f64 = 0.1,
    }
}

params! {
    DerivativeReportParams, DerivativeReportArgs {
        snapshot: String = String::new(),
        #[arg(value_delimiter = ',')]
        q_prime: Vec<Exponent> = vec![Exponent(6.0), Exponent(12.0), Exponent(f64::INFINITY)],
        kmax: usize = 12,
        /// orders `k ≤ k_base` form the baseline
        k_base: usize = 2,
        factor: f64 = 10.0,
        /// 0-based axis of the derivatives
        axis: usize = 0,
    }
}

params! {
    BenchParams, BenchArgs {
        cramer_nmax: usize = 50,
        sup_kmax: usize = 200,
        sup_d: usize = 2,
        g_nmax: usize = 64,
        f_nmax: usize = 100,
        #[arg(value_delimiter = ',')]
        binomial_n: Vec<usize> = vec![1, 2, 4],
        binomial_kmax: usize = 60,
        leibniz_n: usize = 128,
        leibniz_d: usize = 2,
        leibniz_epsilon: f64 = 0.5,
        leibniz_p: f64 = 6.0,
        leibniz_trials: usize = 1000,
        seed: u64 = 1,
    }
}

params! {
    RecurrencesParams, RecurrencesArgs {
        nmax: usize = 40,
        c: f64 = 1.0,
        c1: f64 = 1.0,
        big_n: usize = 1,
        gamma: f64 = 2.0,
    }
}

/// Layers `file` (if any) and then the explicitly given flags over the
/// defaults of `P`.
pub fn resolve<P, A>(file: Option<&Path>, flags: &A) -> Result<P, LabError>
where
    P: for<'de> Deserialize<'de> + Default,
    A: Serialize,
{
    let mut merged = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
            let v: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
            if !v.is_object() {
                return Err(LabError::Config(format!("{}: expected a JSON object", path.display())));
            }
            v
        }
        None => serde_json::Value::Object(Default::default()),
    };
    let over = serde_json::to_value(flags).map_err(|e| LabError::Config(e.to_string()))?;
    if let (Some(m), Some(o)) = (merged.as_object_mut(), over.as_object()) {
        for (k, v) in o {
            m.insert(k.clone(), v.clone());
        }
    }
    serde_json::from_value(merged).map_err(|e| LabError::Config(e.to_string()))
}
