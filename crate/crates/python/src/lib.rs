//! Python bindings: datasets, splits, models, attributions and monitoring.
//!
//! Records cross the boundary as column dictionaries of floats; timestamps
//! travel as RFC 3339 strings.

use std::path::PathBuf;

use pyo3::exceptions::{PyArithmeticError, PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use windxai::analysis::{compare_with_baseline, Monitor, MonitoringReport, StrategyReport};
use windxai::attribution::{
    explain_records, shapley_exact, Attribution as CoreAttribution, ReferenceBuilder, ReferencePoint, ReferenceStrategy,
};
use windxai::data::{
    augment_yaw, filter_operational, generate_synthetic, parse_scada_csv, split_at_midpoint, write_scada_csv,
    ColumnMap, DataSplit, RatedTransition, ScadaRecord, SynthConfig, YawAugmentation,
};
use windxai::iec;
use windxai::models::{evaluate_rmse, train_model, ModelConfig, ModelSpec, TrainedModel};
use windxai::persist::{load_model, model_from_json, model_to_json, save_model};
use windxai::{Error, FeatureSchema, Predictor};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::Divergence { .. } | Error::NonFinite(_) => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for windxai::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// A sequence of 10-minute SCADA records.
#[pyclass(module = "windxai", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Dataset {
    records: Vec<ScadaRecord>,
}

#[pymethods]
impl Dataset {
    /// Reads a SCADA CSV; `columns` remaps fields, e.g. `"v_w=WindSpeed"`.
    #[staticmethod]
    #[pyo3(signature = (path, columns=None))]
    fn from_csv(path: PathBuf, columns: Option<&str>) -> PyResult<Self> {
        let mut map = ColumnMap::default();
        if let Some(spec) = columns {
            map = map.with_overrides(spec).py_err()?;
        }
        Ok(Self {
            records: parse_scada_csv(&path, &map).py_err()?.records,
        })
    }

    fn to_csv(&self, path: PathBuf) -> PyResult<()> {
        let mut buf = Vec::new();
        write_scada_csv(&mut buf, &self.records).py_err()?;
        std::fs::write(&path, buf).map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))
    }

    fn __len__(&self) -> usize {
        self.records.len()
    }

    fn __repr__(&self) -> String {
        format!("Dataset({} records)", self.records.len())
    }

    /// Column name to list of values.
    fn columns<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        let col = |f: fn(&ScadaRecord) -> f64| self.records.iter().map(f).collect::<Vec<f64>>();
        let ts: Vec<String> = self.records.iter().map(|r| r.timestamp.to_rfc3339()).collect();
        d.set_item("timestamp", ts)?;
        d.set_item("v_w", col(|r| r.v_w))?;
        d.set_item("rho", col(|r| r.rho))?;
        d.set_item("ti", col(|r| r.ti))?;
        d.set_item("delta_yaw", col(|r| r.delta_yaw))?;
        d.set_item("power", col(|r| r.power))?;
        d.set_item(
            "status_ok",
            self.records.iter().map(|r| r.status_ok).collect::<Vec<_>>(),
        )?;
        Ok(d)
    }

    fn filter_operational(&self) -> Self {
        Self {
            records: filter_operational(&self.records),
        }
    }

    /// Operational records split at the time midpoint with a seeded
    /// validation subset of the first half.
    #[pyo3(signature = (val_fraction=0.2, seed=0))]
    fn split(&self, val_fraction: f64, seed: u64) -> PyResult<Split> {
        Ok(Split {
            inner: split_at_midpoint(&filter_operational(&self.records), val_fraction, seed).py_err()?,
        })
    }

    fn head(&self, n: usize) -> Self {
        Self {
            records: self.records.iter().take(n).cloned().collect(),
        }
    }
}

/// Synthetic SCADA data from a known turbine.
#[pyfunction]
#[pyo3(signature = (n_samples=20_000, seed=2024, rated_transition="controller_clipped", ti_fixed=None, noise=true))]
fn synthetic(
    n_samples: usize,
    seed: u64,
    rated_transition: &str,
    ti_fixed: Option<f64>,
    noise: bool,
) -> PyResult<Dataset> {
    let transition = match rated_transition.replace('-', "_").as_str() {
        "controller_clipped" => RatedTransition::ControllerClipped,
        "turbulence_smoothed" => RatedTransition::TurbulenceSmoothed,
        other => return Err(PyValueError::new_err(format!("unknown rated transition `{other}`"))),
    };
    let mut config = SynthConfig {
        n_samples,
        rated_transition: transition,
        ..SynthConfig::default()
    };
    config.ti.fixed = ti_fixed;
    if !noise {
        config.noise_base_kw = 0.0;
        config.noise_rel = 0.0;
    }
    Ok(Dataset {
        records: generate_synthetic(&config, seed).py_err()?.0,
    })
}

#[pyclass(module = "windxai", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Split {
    inner: DataSplit,
}

#[pymethods]
impl Split {
    #[getter]
    fn train(&self) -> Dataset {
        Dataset {
            records: self.inner.train.clone(),
        }
    }

    #[getter]
    fn val(&self) -> Dataset {
        Dataset {
            records: self.inner.val.clone(),
        }
    }

    #[getter]
    fn test(&self) -> Dataset {
        Dataset {
            records: self.inner.test.clone(),
        }
    }

    /// Training and validation rows together.
    #[getter]
    fn train_period(&self) -> Dataset {
        Dataset {
            records: self.inner.train_period(),
        }
    }

    /// Injects |N(0, σ)| yaw misalignment clipped at 15°. Returns the
    /// augmented split and the signed test-set power change per record.
    #[pyo3(signature = (sigma_deg=7.5, seed=0))]
    fn augment_yaw(&self, sigma_deg: f64, seed: u64) -> PyResult<(Split, Vec<f64>)> {
        let params = YawAugmentation {
            sigma_deg,
            ..YawAugmentation::default()
        };
        let aug = augment_yaw(&self.inner, &params, seed).py_err()?;
        let truth = aug.test_truth.iter().map(|t| t.delta_p_true).collect();
        Ok((Split { inner: aug.split }, truth))
    }

    fn __repr__(&self) -> String {
        format!(
            "Split(train={}, val={}, test={})",
            self.inner.train.len(),
            self.inner.val.len(),
            self.inner.test.len()
        )
    }
}

fn schema_from(features: Option<&str>, default: FeatureSchema) -> PyResult<FeatureSchema> {
    match features {
        Some(list) => FeatureSchema::parse_list(list).py_err(),
        None => Ok(default),
    }
}

/// Any trained power-curve model: `iec`, `rf`, `ann_small` or `ann_large`.
#[pyclass(module = "windxai", frozen)]
struct Model {
    inner: TrainedModel,
}

#[pymethods]
impl Model {
    #[staticmethod]
    #[pyo3(signature = (preset, split, features=None, seed=0, max_epochs=None, n_trees=None))]
    fn train(
        py: Python<'_>,
        preset: &str,
        split: &Split,
        features: Option<&str>,
        seed: u64,
        max_epochs: Option<usize>,
        n_trees: Option<usize>,
    ) -> PyResult<Self> {
        let mut spec = ModelSpec::preset(preset).py_err()?;
        match &mut spec.config {
            ModelConfig::Mlp(c) => c.max_epochs = max_epochs.unwrap_or(c.max_epochs),
            ModelConfig::Forest(c) => c.n_trees = n_trees.unwrap_or(c.n_trees),
            ModelConfig::Iec(_) => {}
        }
        let schema = schema_from(features, FeatureSchema::base())?;
        let inner = py
            .detach(|| train_model(&spec.config, &split.inner, &schema, seed))
            .py_err()?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: load_model(&path).py_err()?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: model_from_json(text).py_err()?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_model(&self.inner, &path).py_err()
    }

    fn to_json(&self) -> PyResult<String> {
        model_to_json(&self.inner).py_err()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind()
    }

    #[getter]
    fn features(&self) -> Vec<&'static str> {
        self.inner.features().iter().map(|f| f.name()).collect()
    }

    /// Predicted power in kW for rows ordered like `features`.
    fn predict(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        rows.iter()
            .map(|x| self.inner.predict(x))
            .collect::<windxai::Result<_>>()
            .py_err()
    }

    fn predict_dataset(&self, data: &Dataset) -> Vec<f64> {
        self.inner.predict_records(&data.records)
    }

    fn rmse(&self, data: &Dataset) -> PyResult<f64> {
        evaluate_rmse(&self.inner, &data.records).py_err()
    }

    fn __repr__(&self) -> String {
        format!("Model(kind={}, features={:?})", self.inner.kind(), self.features())
    }
}

/// Shapley attribution of one prediction, in kW.
#[pyclass(module = "windxai", frozen, get_all)]
struct Attribution {
    features: Vec<&'static str>,
    phi: Vec<f64>,
    f_x: f64,
    f_ref: f64,
    reference: Vec<f64>,
    strategy: &'static str,
    used_fallback: bool,
}

impl From<CoreAttribution> for Attribution {
    fn from(a: CoreAttribution) -> Self {
        Self {
            features: a.reference.features.iter().map(|f| f.name()).collect(),
            phi: a.phi,
            f_x: a.f_x,
            f_ref: a.f_ref,
            reference: a.reference.values,
            strategy: a.reference.strategy.name(),
            used_fallback: a.reference.used_fallback,
        }
    }
}

#[pymethods]
impl Attribution {
    /// `sum(phi) - (f_x - f_ref)`; zero up to rounding.
    fn conservation_gap(&self) -> f64 {
        self.phi.iter().sum::<f64>() - (self.f_x - self.f_ref)
    }

    fn as_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for (f, p) in self.features.iter().zip(&self.phi) {
            d.set_item(*f, *p)?;
        }
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "Attribution(features={:?}, phi={:?}, f_x={}, f_ref={})",
            self.features, self.phi, self.f_x, self.f_ref
        )
    }
}

fn parse_strategy(s: &str) -> PyResult<ReferenceStrategy> {
    s.parse().py_err()
}

/// Explains every record of `data` under `reference` (min, mean or
/// informed), with reference statistics from `train`.
#[pyfunction]
#[pyo3(signature = (model, data, train, reference="informed"))]
fn explain(
    py: Python<'_>,
    model: &Model,
    data: &Dataset,
    train: &Dataset,
    reference: &str,
) -> PyResult<Vec<Attribution>> {
    let strategy = parse_strategy(reference)?;
    let schema = FeatureSchema::new(model.inner.features().to_vec()).py_err()?;
    let attrs = py
        .detach(|| {
            let builder = ReferenceBuilder::new(&train.records, &schema)?;
            explain_records(&model.inner, &data.records, &builder, strategy)
        })
        .py_err()?;
    Ok(attrs.into_iter().map(Attribution::from).collect())
}

/// Exact Shapley values of `model` at `x` relative to an explicit reference.
#[pyfunction]
fn shapley(model: &Model, x: Vec<f64>, reference: Vec<f64>) -> PyResult<Attribution> {
    let point = ReferencePoint::custom(model.inner.features().to_vec(), reference);
    Ok(shapley_exact(&model.inner, &x, &point).py_err()?.into())
}

fn report_dict<'py>(py: Python<'py>, r: &StrategyReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (f, v) in r.features.iter().zip(&r.r2) {
        d.set_item(f.name(), *v)?;
    }
    d.set_item("r2_phys", r.r2_phys)?;
    d.set_item("n_instances", r.n_instances)?;
    Ok(d)
}

/// Per-feature r² between the attributions of `model` and `baseline`
/// under the minimum reference, plus their mean `r2_phys`.
#[pyfunction]
fn compare_strategies<'py>(
    py: Python<'py>,
    model: &Model,
    baseline: &Model,
    train: &Dataset,
    data: &Dataset,
) -> PyResult<Bound<'py, PyDict>> {
    let (report, _, _) = py
        .detach(|| compare_with_baseline(&model.inner, &baseline.inner, &train.records, &data.records))
        .py_err()?;
    report_dict(py, &report)
}

fn monitoring_dict<'py>(py: Python<'py>, r: &MonitoringReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("timestamp", r.timestamp.to_rfc3339())?;
    d.set_item("power", r.power)?;
    d.set_item("f_x", r.f_x)?;
    d.set_item("f_ref", r.f_ref)?;
    d.set_item("residual", r.residual)?;
    let phi = PyDict::new(py);
    for (f, p) in r.features.iter().zip(&r.phi) {
        phi.set_item(f.name(), *p)?;
    }
    d.set_item("phi", phi)?;
    d.set_item("used_fallback", r.used_fallback)?;
    d.set_item("low_confidence", r.low_confidence)?;
    Ok(d)
}

/// Decomposes each record's expected power relative to healthy conditions
/// at its wind speed. The model must use `delta_yaw`.
#[pyfunction]
fn monitor<'py>(py: Python<'py>, model: &Model, data: &Dataset, train: &Dataset) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let schema = FeatureSchema::new(model.inner.features().to_vec()).py_err()?;
    let reports = py
        .detach(|| {
            let m = Monitor::new(&model.inner, &train.records, &schema)?;
            data.records
                .iter()
                .map(|r| m.decompose(r))
                .collect::<windxai::Result<Vec<_>>>()
        })
        .py_err()?;
    reports.iter().map(|r| monitoring_dict(py, r)).collect()
}

/// `v · (rho / rho_ref)^(1/3)`.
#[pyfunction]
fn density_normalize(v: f64, rho: f64, rho_ref: f64) -> PyResult<f64> {
    iec::density_normalize(v, rho, rho_ref).py_err()
}

/// cos³ of the misalignment angle in degrees.
#[pyfunction]
fn yaw_power_factor(delta_deg: f64) -> PyResult<f64> {
    iec::yaw_power_factor(delta_deg).py_err()
}

#[pymodule]
#[pyo3(name = "windxai")]
fn windxai_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<Split>()?;
    m.add_class::<Model>()?;
    m.add_class::<Attribution>()?;
    m.add_function(wrap_pyfunction!(synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(explain, m)?)?;
    m.add_function(wrap_pyfunction!(shapley, m)?)?;
    m.add_function(wrap_pyfunction!(compare_strategies, m)?)?;
    m.add_function(wrap_pyfunction!(monitor, m)?)?;
    m.add_function(wrap_pyfunction!(density_normalize, m)?)?;
    m.add_function(wrap_pyfunction!(yaw_power_factor, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
