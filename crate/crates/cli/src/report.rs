//! The `analyze` report: field data, matrices and the admissibility verdict.

use std::fmt;

use trisub::cyclotomic::{classify, Classification};
use trisub::matrix::IntMatrix;
use trisub::problem::Problem;
use trisub::{Error, Result};

#[derive(Clone, Debug)]
pub struct Analysis {
    pub n: u32,
    pub minimal_polynomial: String,
    /// `(k, exact coefficients over 1, a_2, ..., value)` for `k = 1..=(n-1)/2`.
    pub lengths: Vec<(usize, String, f64)>,
    pub lambda_label: String,
    pub lambda_value: f64,
    /// `(prototile, exact area over T(1,1,n-2), value)`.
    pub areas: Vec<(String, String, f64)>,
    pub x: IntMatrix,
    pub m: std::result::Result<IntMatrix, Error>,
    pub class: Classification,
}

impl Analysis {
    pub fn new(problem: &Problem) -> Result<Self> {
        let field = problem.field();
        let d = field.degree();
        let lengths = (1..=d)
            .map(|k| field.length(k).map(|a| (k, a.to_string(), field.to_f64(a))))
            .collect::<Result<Vec<_>>>()?;
        let areas = problem
            .protos
            .iter()
            .zip(&problem.areas)
            .map(|(t, a)| (t.to_string(), a.to_string(), field.to_f64(a)))
            .collect();
        Ok(Analysis {
            n: problem.n(),
            minimal_polynomial: field.minimal_polynomial().to_string(),
            lengths,
            lambda_label: problem.lambda.label(),
            lambda_value: field.to_f64(problem.lambda.value()),
            areas,
            x: problem.x.clone(),
            m: problem.m.clone(),
            class: classify(field, &problem.lambda),
        })
    }

    pub fn admissible(&self) -> bool {
        self.m.is_ok()
    }
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n = {}", self.n)?;
        writeln!(f, "q_n(x) = {}", self.minimal_polynomial)?;
        writeln!(f, "lengths (coefficients over 1, a_2, a_2^2, ...):")?;
        for (k, exact, v) in &self.lengths {
            writeln!(f, "  a_{k} = {exact} = {v:.12}")?;
        }
        writeln!(
            f,
            "lambda = {} = {:.12}",
            self.lambda_label, self.lambda_value
        )?;
        writeln!(f, "areas relative to T(1,1,{}):", self.n - 2)?;
        for (t, exact, v) in &self.areas {
            writeln!(f, "  {t}: {exact} = {v:.12}")?;
        }
        writeln!(f, "X = {}", self.x)?;
        match &self.m {
            Ok(m) => writeln!(f, "M = {m}")?,
            Err(e) => writeln!(f, "M: {e}")?,
        }
        let c = &self.class;
        let conj: Vec<String> = c.conjugates.iter().map(|v| format!("{v:.12}")).collect();
        writeln!(f, "conjugates of lambda: {}", conj.join(", "))?;
        writeln!(f, "norm of lambda: {}", c.norm)?;
        writeln!(
            f,
            "lambda is {}, {}",
            if c.is_pv { "PV" } else { "not PV" },
            if c.is_unit { "unit" } else { "not a unit" }
        )?;
        write!(
            f,
            "verdict: {}",
            if self.admissible() {
                "admissible"
            } else {
                "inadmissible"
            }
        )?;
        writeln!(f)
    }
}
