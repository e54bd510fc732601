use serde::Serialize;

/// Neumaier's compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Converges,
    Diverges,
    Inconclusive,
}

/// Partial sums at checkpoints plus an analytic bound on the unevaluated
/// tail. For `Diverges`, `tail_bound` is infinite and `tail_formula` names the
/// divergent minorant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesCertificate {
    pub series: String,
    pub checkpoints: Vec<(u64, f64)>,
    pub tail_bound: f64,
    pub tail_formula: String,
    pub verdict: Verdict,
}

impl SeriesCertificate {
    pub fn partial(&self, n: u64) -> Option<f64> {
        self.checkpoints.iter().find(|c| c.0 == n).map(|c| c.1)
    }

    pub fn last(&self) -> f64 {
        self.checkpoints.last().map_or(0.0, |c| c.1)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "series": self.series,
            "checkpoints": self.checkpoints,
            "tail_bound": if self.tail_bound.is_finite() {
                serde_json::json!(self.tail_bound)
            } else {
                serde_json::json!("inf")
            },
            "tail_formula": self.tail_formula,
            "verdict": self.verdict,
        })
    }
}
