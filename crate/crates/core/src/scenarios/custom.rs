//! User-defined scenarios: operators given as coefficient/matrix terms or as
//! tabulated samples, and an explicit initial state.

use serde::Deserialize;
use serde_json::Value;

use super::{Problem, ScenarioConfig};
use crate::dynamics::TimeDepOperator;
use crate::error::{Error, Result};
use crate::linops::{c, norm_defect, CMatrix, CVector};

type RawMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermSpec {
    coeff: Value,
    matrix: RawMatrix,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum OperatorSpec {
    Terms { terms: Vec<TermSpec> },
    Tabulated { times: Vec<f64>, matrices: Vec<RawMatrix> },
}

fn typed<T: for<'de> Deserialize<'de>>(key: &str, v: &Value) -> Result<T> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." { format!("params.{key}") } else { format!("params.{key}.{inner}") };
        Error::config(path, e.into_inner().to_string())
    })
}

fn matrix(raw: &RawMatrix, path: &str) -> Result<CMatrix> {
    let n = raw.len();
    if n == 0 || raw.iter().any(|row| row.len() != n) {
        return Err(Error::config(path, "matrix must be square and non-empty"));
    }
    if raw.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(Error::config(path, "matrix entries must be finite"));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| c(raw[i][j][0], raw[i][j][1])))
}

fn operator(key: &str, v: &Value) -> Result<TimeDepOperator> {
    let spec: OperatorSpec = typed(key, v)?;
    let wrap = |e: Error| Error::config(format!("params.{key}"), e.to_string());
    match spec {
        OperatorSpec::Terms { terms } => {
            if terms.is_empty() {
                return Err(Error::config(format!("params.{key}.terms"), "at least one term is required"));
            }
            let mut out = Vec::with_capacity(terms.len());
            for (i, t) in terms.iter().enumerate() {
                let f = super::config::parse_function(&t.coeff)
                    .map_err(|e| Error::config(format!("params.{key}.terms[{i}].coeff"), e))?;
                out.push((f, matrix(&t.matrix, &format!("params.{key}.terms[{i}].matrix"))?));
            }
            TimeDepOperator::from_terms(out).map_err(wrap)
        }
        OperatorSpec::Tabulated { times, matrices } => {
            let ms = matrices
                .iter()
                .enumerate()
                .map(|(i, m)| matrix(m, &format!("params.{key}.matrices[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            TimeDepOperator::tabulated(times, ms).map_err(wrap)
        }
    }
}

pub(super) fn problem(cfg: &ScenarioConfig) -> Result<Problem> {
    let p = cfg.params();
    p.only(&["hbar", "psi0", "hamiltonian", "observable"])?;
    let hbar = p.positive("hbar", Some(1.0))?;
    let require = |k: &str| p.raw(k).ok_or_else(|| Error::config(format!("params.{k}"), "missing required parameter"));
    let raw_psi: Vec<[f64; 2]> = typed("psi0", require("psi0")?)?;
    if raw_psi.is_empty() || raw_psi.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::config("params.psi0", "state must be non-empty with finite entries"));
    }
    let psi0 = CVector::from_iterator(raw_psi.len(), raw_psi.iter().map(|z| c(z[0], z[1])));
    let nd = norm_defect(&psi0);
    if nd > cfg.tolerances.norm {
        return Err(Error::config("params.psi0", format!("state is not normalized (defect {nd:e})")));
    }
    let h = operator("hamiltonian", require("hamiltonian")?)?.with_fd_step(cfg.tolerances.h_op);
    let a = operator("observable", require("observable")?)?.with_fd_step(cfg.tolerances.h_op);
    if h.dim() != psi0.len() || a.dim() != psi0.len() {
        return Err(Error::config(
            "params",
            format!("dimensions differ: hamiltonian {}, observable {}, psi0 {}", h.dim(), a.dim(), psi0.len()),
        ));
    }
    let mut prob = Problem::plain(h, a, psi0, hbar);
    prob.bloch = cfg.options.bloch_oracle;
    Ok(prob)
}
