//! Versioned JSON formats for fitted models and atomic file output.
//!
//! Matrices are stored as `{rows, cols, data}` with `data` in row-major
//! order. Floats are written in shortest round-trip form, so a save/load
//! cycle reproduces every value bit for bit.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{LrmarError, Result};
use crate::extensions::WccaPosterior;
use crate::spec::ModelSpec;
use crate::vb::{
    FittedModel, FreeEnergyReport, GammaFamily, LatentPosterior, Posterior, VPosterior, WPosterior,
};

pub const MODEL_FORMAT: &str = "lrmar-model";
pub const WCCA_FORMAT: &str = "lrmar-wcca";
pub const FORMAT_MAJOR: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MatrixDoc {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl From<&DMatrix<f64>> for MatrixDoc {
    fn from(m: &DMatrix<f64>) -> Self {
        MatrixDoc {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().as_slice().to_vec(),
        }
    }
}

impl MatrixDoc {
    fn to_matrix(&self, what: &str) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(LrmarError::Format(format!(
                "{what}: {} values for a {}x{} matrix",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GammaDoc {
    shape: f64,
    rates: Vec<f64>,
}

impl From<&GammaFamily> for GammaDoc {
    fn from(g: &GammaFamily) -> Self {
        GammaDoc {
            shape: g.shape,
            rates: g.rates.as_slice().to_vec(),
        }
    }
}

impl From<&GammaDoc> for GammaFamily {
    fn from(g: &GammaDoc) -> Self {
        GammaFamily::new(g.shape, DVector::from_column_slice(&g.rates))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LoadingsDoc {
    mean: MatrixDoc,
    covariances: Vec<MatrixDoc>,
}

impl From<&VPosterior> for LoadingsDoc {
    fn from(v: &VPosterior) -> Self {
        LoadingsDoc {
            mean: (&v.v_bar).into(),
            covariances: v.s_v.iter().map(MatrixDoc::from).collect(),
        }
    }
}

impl LoadingsDoc {
    fn to_posterior(&self, what: &str) -> Result<VPosterior> {
        Ok(VPosterior {
            v_bar: self.mean.to_matrix(what)?,
            s_v: self
                .covariances
                .iter()
                .map(|c| c.to_matrix(what))
                .collect::<Result<_>>()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelDoc {
    version: String,
    spec: ModelSpec,
    channel_names: Vec<String>,
    means: Vec<f64>,
    z_bar: MatrixDoc,
    s_z: MatrixDoc,
    w_bar: MatrixDoc,
    s_w: MatrixDoc,
    v: LoadingsDoc,
    omega: GammaDoc,
    alpha: GammaDoc,
    gamma: GammaDoc,
    free_energy_trace: Vec<FreeEnergyReport>,
    converged: bool,
    iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct WccaDoc {
    version: String,
    spec: ModelSpec,
    means: Vec<f64>,
    z_bar: MatrixDoc,
    s_z: MatrixDoc,
    f: LoadingsDoc,
    g: LoadingsDoc,
    noise1: GammaDoc,
    noise2: GammaDoc,
    ard_f: GammaDoc,
    ard_g: GammaDoc,
    free_energy_trace: Vec<FreeEnergyReport>,
    converged: bool,
    iterations: usize,
}

fn version_string(format: &str) -> String {
    format!("{format}-v{FORMAT_MAJOR}")
}

/// Accepts `<format>-v<major>` with `major <= FORMAT_MAJOR`.
fn check_version(found: &str, format: &str) -> Result<()> {
    let major = found
        .strip_prefix(format)
        .and_then(|r| r.strip_prefix("-v"))
        .and_then(|r| r.split('.').next())
        .and_then(|r| r.parse::<u32>().ok())
        .ok_or_else(|| {
            LrmarError::Format(format!("expected a {format}-v{FORMAT_MAJOR} document, found {found:?}"))
        })?;
    if major > FORMAT_MAJOR {
        return Err(LrmarError::Format(format!(
            "{found} is newer than the supported {}",
            version_string(format)
        )));
    }
    Ok(())
}

pub fn model_to_json(model: &FittedModel) -> Result<String> {
    let p = &model.posterior;
    let doc = ModelDoc {
        version: version_string(MODEL_FORMAT),
        spec: model.spec.clone(),
        channel_names: model.channel_names.clone(),
        means: model.means.as_slice().to_vec(),
        z_bar: (&p.latent.z_bar).into(),
        s_z: (&p.latent.s_z).into(),
        w_bar: (&p.w.w_bar).into(),
        s_w: (&p.w.s_w).into(),
        v: (&p.v).into(),
        omega: (&p.omega).into(),
        alpha: (&p.alpha).into(),
        gamma: (&p.gamma).into(),
        free_energy_trace: model.free_energy_trace.clone(),
        converged: model.converged,
        iterations: model.iterations,
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn model_from_json(s: &str) -> Result<FittedModel> {
    let value: serde_json::Value = serde_json::from_str(s)?;
    let version = value.get("version").and_then(|v| v.as_str()).unwrap_or("");
    check_version(version, MODEL_FORMAT)?;
    let doc: ModelDoc = serde_json::from_value(value)?;
    let model = FittedModel {
        spec: doc.spec,
        posterior: Posterior {
            latent: LatentPosterior {
                z_bar: doc.z_bar.to_matrix("z_bar")?,
                s_z: doc.s_z.to_matrix("s_z")?,
            },
            w: WPosterior {
                w_bar: doc.w_bar.to_matrix("w_bar")?,
                s_w: doc.s_w.to_matrix("s_w")?,
            },
            v: doc.v.to_posterior("v")?,
            omega: (&doc.omega).into(),
            alpha: (&doc.alpha).into(),
            gamma: (&doc.gamma).into(),
        },
        free_energy_trace: doc.free_energy_trace,
        means: DVector::from_vec(doc.means),
        channel_names: doc.channel_names,
        converged: doc.converged,
        iterations: doc.iterations,
    };
    check_model_shapes(&model)?;
    Ok(model)
}

fn check_model_shapes(m: &FittedModel) -> Result<()> {
    let (p, q, l, n) = (m.spec.p, m.spec.q, m.spec.l, m.means.len());
    let post = &m.posterior;
    let ok = post.w.w_bar.shape() == (n * p, q)
        && post.w.s_w.shape() == (n * p, n * p)
        && post.v.v_bar.shape() == (q, n * l)
        && post.v.s_v.len() == n * l
        && post.latent.s_z.shape() == (q, q)
        && post.omega.len() == n * l
        && post.alpha.len() == n * p
        && post.gamma.len() == q
        && m.channel_names.len() == n;
    if ok {
        Ok(())
    } else {
        Err(LrmarError::Format(
            "model document has inconsistent matrix dimensions".into(),
        ))
    }
}

pub fn wcca_to_json(post: &WccaPosterior) -> Result<String> {
    let doc = WccaDoc {
        version: version_string(WCCA_FORMAT),
        spec: post.spec.clone(),
        means: post.means.as_slice().to_vec(),
        z_bar: (&post.z_bar).into(),
        s_z: (&post.s_z).into(),
        f: (&post.f).into(),
        g: (&post.g).into(),
        noise1: (&post.noise1).into(),
        noise2: (&post.noise2).into(),
        ard_f: (&post.ard_f).into(),
        ard_g: (&post.ard_g).into(),
        free_energy_trace: post.free_energy_trace.clone(),
        converged: post.converged,
        iterations: post.iterations,
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn wcca_from_json(s: &str) -> Result<WccaPosterior> {
    let value: serde_json::Value = serde_json::from_str(s)?;
    let version = value.get("version").and_then(|v| v.as_str()).unwrap_or("");
    check_version(version, WCCA_FORMAT)?;
    let doc: WccaDoc = serde_json::from_value(value)?;
    Ok(WccaPosterior {
        spec: doc.spec,
        z_bar: doc.z_bar.to_matrix("z_bar")?,
        s_z: doc.s_z.to_matrix("s_z")?,
        f: doc.f.to_posterior("f")?,
        g: doc.g.to_posterior("g")?,
        noise1: (&doc.noise1).into(),
        noise2: (&doc.noise2).into(),
        ard_f: (&doc.ard_f).into(),
        ard_g: (&doc.ard_g).into(),
        free_energy_trace: doc.free_energy_trace,
        means: DVector::from_vec(doc.means),
        converged: doc.converged,
        iterations: doc.iterations,
    })
}

pub fn save_model(model: &FittedModel, path: impl AsRef<Path>) -> Result<()> {
    let json = model_to_json(model)?;
    write_atomic(path, |w| Ok(w.write_all(json.as_bytes())?))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<FittedModel> {
    model_from_json(&std::fs::read_to_string(path)?)
}

/// Writes through a temporary file in the destination directory and renames
/// it into place, so readers never observe a partial file.
pub fn write_atomic<F>(path: impl AsRef<Path>, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        body(&mut buf)?;
        buf.flush()?;
    }
    tmp.persist(path).map_err(|e| LrmarError::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_doc_is_row_major() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let d = MatrixDoc::from(&m);
        assert_eq!(d.data, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(d.to_matrix("m").unwrap(), m);
    }

    #[test]
    fn version_checks() {
        assert!(check_version("lrmar-model-v1", MODEL_FORMAT).is_ok());
        assert!(check_version("lrmar-model-v0", MODEL_FORMAT).is_ok());
        let err = check_version("lrmar-model-v2", MODEL_FORMAT).unwrap_err();
        assert!(err.to_string().contains("newer"));
        assert!(check_version("lrmar-wcca-v1", MODEL_FORMAT).is_err());
        assert!(check_version("", MODEL_FORMAT).is_err());
    }
}
