//! Python module `draftmarks`.
//!
//! Logs and envelopes are accepted as `str` or `bytes`. Errors raise
//! `DraftmarksError` subclasses.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use draftmarks_core::config::EngineConfig;
use draftmarks_core::controller::{build_process_schema, ProcessSchema, Role};
use draftmarks_core::fixtures;
use draftmarks_core::ingest::{parse_session_log, replay_session_with};
use draftmarks_core::model::{DocumentHistory, ROOT};
use draftmarks_core::schema_io::{export_static_document, parse_schema as parse_envelope, serialize_schema};
use draftmarks_core::store::{self, SessionStore, StoreError};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyIndexError, PyTypeError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyString};

create_exception!(draftmarks, DraftmarksError, PyException, "Base class for draftmarks errors.");
create_exception!(draftmarks, IngestError, DraftmarksError, "The session log was rejected.");
create_exception!(draftmarks, ConfigError, DraftmarksError, "The engine config is invalid.");
create_exception!(draftmarks, SchemaError, DraftmarksError, "A schema could not be built or parsed.");
create_exception!(draftmarks, NotFoundError, DraftmarksError, "No such session.");

fn raw_bytes(obj: &Bound<'_, PyAny>) -> PyResult<Vec<u8>> {
    if let Ok(b) = obj.cast::<PyBytes>() {
        Ok(b.as_bytes().to_vec())
    } else if let Ok(s) = obj.cast::<PyString>() {
        Ok(s.to_str()?.as_bytes().to_vec())
    } else {
        Err(PyTypeError::new_err("expected str or bytes"))
    }
}

fn parse_role(name: &str) -> PyResult<Role> {
    name.parse().map_err(|e: draftmarks_core::controller::UnknownRole| {
        pyo3::exceptions::PyValueError::new_err(e.to_string())
    })
}

fn store_err(e: StoreError) -> PyErr {
    match e {
        StoreError::NotFound(_) => NotFoundError::new_err(e.to_string()),
        StoreError::Ingest(_) => IngestError::new_err(e.to_string()),
        StoreError::Controller(_) => SchemaError::new_err(e.to_string()),
        StoreError::Io { .. } => DraftmarksError::new_err(e.to_string()),
    }
}

/// Engine settings, from TOML text or defaults.
#[pyclass(name = "Config", frozen)]
struct PyConfig(EngineConfig);

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (toml=None))]
    fn new(toml: Option<&str>) -> PyResult<Self> {
        match toml {
            None => Ok(PyConfig(EngineConfig::default())),
            Some(t) => EngineConfig::from_toml_str(t, Path::new("<python>"))
                .map(PyConfig)
                .map_err(|e| ConfigError::new_err(e.to_string())),
        }
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        EngineConfig::load(&path)
            .map(PyConfig)
            .map_err(|e| ConfigError::new_err(e.to_string()))
    }

    #[getter]
    fn fingerprint(&self) -> String {
        self.0.fingerprint()
    }

    #[getter]
    fn deletion_threshold(&self) -> usize {
        self.0.thresholds.deletion
    }
}

fn config_or_default(config: Option<&PyConfig>) -> EngineConfig {
    config.map(|c| c.0.clone()).unwrap_or_default()
}

/// A replayed session: the list of versions and the node pool.
#[pyclass(name = "History", frozen)]
struct PyHistory(DocumentHistory);

#[pymethods]
impl PyHistory {
    #[getter]
    fn version_count(&self) -> usize {
        self.0.version_count()
    }

    #[getter]
    fn pool_size(&self) -> usize {
        self.0.pool_size()
    }

    /// Why each version was sealed, oldest first.
    fn triggers(&self) -> Vec<String> {
        self.0
            .versions()
            .iter()
            .map(|v| serde_json::to_value(v.trigger).unwrap().as_str().unwrap().to_string())
            .collect()
    }

    /// Indented dump of one version; negative indexes count from the end.
    #[pyo3(signature = (version=-1))]
    fn outline(&self, version: isize) -> PyResult<String> {
        let n = self.0.version_count() as isize;
        let i = if version < 0 { n + version } else { version };
        if !(0..n).contains(&i) {
            return Err(PyIndexError::new_err(format!("version {version} of {n}")));
        }
        Ok(self.0.materialize(i as usize).unwrap().outline())
    }

    /// Plain text of the latest version.
    fn text(&self) -> String {
        self.0.plain_text_in(self.0.current(), ROOT).unwrap_or_default()
    }
}

/// A role-filtered process schema.
#[pyclass(name = "Schema", frozen)]
struct PySchema(ProcessSchema);

#[pymethods]
impl PySchema {
    #[getter]
    fn role(&self) -> &'static str {
        self.0.role.as_str()
    }

    #[getter]
    fn session(&self) -> &str {
        &self.0.session
    }

    #[getter]
    fn text(&self) -> &str {
        &self.0.document.text
    }

    /// Top-level marks as plain dicts; nested marks sit under `children`.
    #[getter]
    fn marks<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let text = serde_json::to_string(&self.0.marks).map_err(|e| SchemaError::new_err(e.to_string()))?;
        py.import("json")?.call_method1("loads", (text,))
    }

    /// CSS class of every mark, nested ones included.
    fn classes(&self) -> Vec<String> {
        self.0.all_marks().iter().map(|m| m.class_name()).collect()
    }

    /// Canonical envelope bytes.
    fn envelope<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &serialize_schema(&self.0))
    }

    fn to_html(&self) -> String {
        export_static_document(&self.0)
    }

    fn validate(&self) -> PyResult<()> {
        self.0.validate().map_err(|e| SchemaError::new_err(e.to_string()))
    }
}

#[pyfunction]
fn session_id(log: &Bound<'_, PyAny>) -> PyResult<String> {
    Ok(store::session_id(&raw_bytes(log)?))
}

/// The bundled scenario logs as JSON-lines text, by name.
#[pyfunction(name = "fixtures")]
fn fixture_logs() -> BTreeMap<String, String> {
    fixtures::all()
        .into_iter()
        .map(|(name, log)| (name.to_string(), log.to_jsonl()))
        .collect()
}

#[pyfunction]
#[pyo3(signature = (log, threshold=10))]
fn replay(py: Python<'_>, log: &Bound<'_, PyAny>, threshold: usize) -> PyResult<PyHistory> {
    let bytes = raw_bytes(log)?;
    py.detach(|| {
        let parsed = parse_session_log(&bytes)?;
        replay_session_with(&parsed, threshold)
    })
    .map(PyHistory)
    .map_err(|e| IngestError::new_err(e.to_string()))
}

#[pyfunction]
#[pyo3(signature = (history, role, config=None, session=""))]
fn build_schema(
    history: &PyHistory,
    role: &str,
    config: Option<&PyConfig>,
    session: &str,
) -> PyResult<PySchema> {
    let config = config_or_default(config);
    build_process_schema(&history.0, parse_role(role)?, &config)
        .map(|s| PySchema(s.with_session(session)))
        .map_err(|e| SchemaError::new_err(e.to_string()))
}

#[pyfunction]
fn parse_schema(envelope: &Bound<'_, PyAny>) -> PyResult<PySchema> {
    parse_envelope(&raw_bytes(envelope)?)
        .map(PySchema)
        .map_err(|e| SchemaError::new_err(e.to_string()))
}

/// Content-addressed session store on disk.
#[pyclass(name = "Store", frozen)]
struct PyStore(SessionStore);

#[pymethods]
impl PyStore {
    #[new]
    #[pyo3(signature = (root, config=None))]
    fn new(root: PathBuf, config: Option<&PyConfig>) -> PyResult<Self> {
        SessionStore::open(root, config_or_default(config))
            .map(PyStore)
            .map_err(store_err)
    }

    /// Returns `(id, created)`.
    fn store_session(&self, py: Python<'_>, log: &Bound<'_, PyAny>) -> PyResult<(String, bool)> {
        let bytes = raw_bytes(log)?;
        py.detach(|| self.0.store_session(&bytes))
            .map(|(id, s)| (id, s.created))
            .map_err(store_err)
    }

    fn exists(&self, id: &str) -> bool {
        self.0.exists(id)
    }

    fn schema<'py>(&self, py: Python<'py>, id: &str, role: &str) -> PyResult<Bound<'py, PyBytes>> {
        let r = parse_role(role)?;
        let bytes = py.detach(|| self.0.get_schema(id, r)).map_err(store_err)?;
        Ok(PyBytes::new(py, &bytes))
    }

    fn export(&self, py: Python<'_>, id: &str, role: &str) -> PyResult<String> {
        let r = parse_role(role)?;
        py.detach(|| self.0.get_export(id, r)).map_err(store_err)
    }

    fn raw_log<'py>(&self, py: Python<'py>, id: &str) -> PyResult<Bound<'py, PyBytes>> {
        let bytes = self.0.raw_log(id).map_err(store_err)?;
        Ok(PyBytes::new(py, &bytes))
    }
}

#[pymodule]
fn draftmarks(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("DraftmarksError", py.get_type::<DraftmarksError>())?;
    m.add("IngestError", py.get_type::<IngestError>())?;
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add("SchemaError", py.get_type::<SchemaError>())?;
    m.add("NotFoundError", py.get_type::<NotFoundError>())?;
    m.add("ROLES", Role::ALL.iter().map(|r| r.as_str()).collect::<Vec<_>>())?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyHistory>()?;
    m.add_class::<PySchema>()?;
    m.add_class::<PyStore>()?;
    m.add_function(wrap_pyfunction!(session_id, m)?)?;
    m.add_function(wrap_pyfunction!(fixture_logs, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    m.add_function(wrap_pyfunction!(build_schema, m)?)?;
    m.add_function(wrap_pyfunction!(parse_schema, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_module(f: impl FnOnce(Python<'_>, &Bound<'_, PyModule>)) {
        Python::initialize();
        Python::attach(|py| {
            let m = PyModule::new(py, "draftmarks").unwrap();
            draftmarks(&m).unwrap();
            f(py, &m);
        });
    }

    #[test]
    fn replay_and_schema_from_python() {
        with_module(|py, m| {
            let log = fixtures::bruce().to_jsonl();
            let h = m.getattr("replay").unwrap().call1((log.as_str(),)).unwrap();
            let n: usize = h.getattr("version_count").unwrap().extract().unwrap();
            assert!(n >= 2);
            let s = m
                .getattr("build_schema")
                .unwrap()
                .call1((h, "reviewer"))
                .unwrap();
            let env = s.call_method0("envelope").unwrap();
            let back = m.getattr("parse_schema").unwrap().call1((env,)).unwrap();
            let role: String = back.getattr("role").unwrap().extract().unwrap();
            assert_eq!(role, "reviewer");
            let marks = back.getattr("marks").unwrap();
            assert!(marks.len().unwrap() > 0);
            let _ = py;
        });
    }

    #[test]
    fn errors_map_to_exception_types() {
        with_module(|py, m| {
            let err = m.getattr("replay").unwrap().call1(("not a log",)).unwrap_err();
            assert!(err.is_instance_of::<IngestError>(py));
            assert!(err.is_instance_of::<DraftmarksError>(py));
            let err = m.getattr("replay").unwrap().call1((3,)).unwrap_err();
            assert!(err.is_instance_of::<PyTypeError>(py));
            let err = m.getattr("parse_schema").unwrap().call1((b"{}".as_slice(),)).unwrap_err();
            assert!(err.is_instance_of::<SchemaError>(py));
        });
    }
}
