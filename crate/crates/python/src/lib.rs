//! Python bindings: `import pydefframe`.

use std::collections::BTreeMap;

use defframe::frames::{self, Row, SCHEMA};
use defframe::{sim_eval, BasisStore, DefinitionFrame, EncodedFrame, Error, LinearTransform, Relation, RowMask, TaggerModel};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn relation(name: &str) -> PyResult<Relation> {
    name.parse().map_err(py_err)
}

fn mask(spec: &str) -> PyResult<RowMask> {
    spec.parse().map_err(py_err)
}

/// Word vectors loaded from a text file.
#[pyclass(name = "Basis", module = "pydefframe", frozen)]
struct PyBasis {
    inner: BasisStore,
}

#[pymethods]
impl PyBasis {
    #[staticmethod]
    #[pyo3(signature = (path, lowercase = true))]
    fn load(path: &str, lowercase: bool) -> PyResult<Self> {
        Ok(PyBasis {
            inner: BasisStore::load(path, lowercase).map_err(py_err)?,
        })
    }

    /// Build from a `{token: vector}` mapping.
    #[staticmethod]
    #[pyo3(signature = (vectors, lowercase = true))]
    fn from_dict(vectors: BTreeMap<String, Vec<f64>>, lowercase: bool) -> PyResult<Self> {
        let dim = vectors.values().next().map_or(0, Vec::len);
        Ok(PyBasis {
            inner: BasisStore::from_entries(dim, vectors, lowercase).map_err(py_err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __contains__(&self, token: &str) -> bool {
        self.inner.contains_token(token)
    }

    /// Mean vector of the known tokens of `term`, or `None`.
    fn lookup(&self, term: &str) -> Option<Vec<f64>> {
        self.inner.lookup_term(term)
    }

    fn nearest(&self, vector: Vec<f64>, k: usize) -> PyResult<Vec<(String, f64)>> {
        self.inner.nearest_terms(&vector, k).map_err(py_err)
    }
}

#[pyclass(name = "Frame", module = "pydefframe", from_py_object)]
#[derive(Clone)]
struct PyFrame {
    inner: DefinitionFrame,
}

#[pymethods]
impl PyFrame {
    #[new]
    #[pyo3(signature = (concept, relations = None))]
    fn new(concept: &str, relations: Option<BTreeMap<String, Vec<String>>>) -> PyResult<Self> {
        let mut inner = DefinitionFrame::new(concept);
        for (r, terms) in relations.unwrap_or_default() {
            let r = relation(&r)?;
            for t in terms {
                inner.add_term(r, t);
            }
        }
        Ok(PyFrame { inner })
    }

    #[getter]
    fn concept(&self) -> &str {
        &self.inner.concept
    }

    /// Returns `False` if the term was already listed.
    fn add_term(&mut self, relation_name: &str, term: &str) -> PyResult<bool> {
        Ok(self.inner.add_term(relation(relation_name)?, term))
    }

    fn terms(&self, relation_name: &str) -> PyResult<Vec<String>> {
        Ok(self.inner.terms(relation(relation_name)?).to_vec())
    }

    fn to_dict(&self) -> BTreeMap<String, Vec<String>> {
        self.inner
            .relations()
            .map(|(r, t)| (r.to_string(), t.to_vec()))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Frame({:?}, {:?})", self.inner.concept, self.to_dict())
    }
}

#[pyclass(name = "EncodedFrame", module = "pydefframe", from_py_object)]
#[derive(Clone)]
struct PyEncoded {
    inner: EncodedFrame,
}

#[pymethods]
impl PyEncoded {
    #[getter]
    fn concept(&self) -> &str {
        &self.inner.concept
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// The 7 rows, in schema order.
    fn rows(&self) -> Vec<Vec<f64>> {
        SCHEMA.iter().map(|&r| self.inner.row(r).to_vec()).collect()
    }

    fn row(&self, name: &str) -> PyResult<Vec<f64>> {
        let r: Row = name.parse().map_err(py_err)?;
        Ok(self.inner.row(r).to_vec())
    }

    /// Copy with rows outside the mask zeroed.
    fn restricted(&self, mask_spec: &str) -> PyResult<Self> {
        Ok(PyEncoded {
            inner: self.inner.restricted(mask(mask_spec)?),
        })
    }
}

#[pyclass(name = "Tagger", module = "pydefframe", frozen)]
struct PyTagger {
    inner: TaggerModel,
}

#[pymethods]
impl PyTagger {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyTagger {
            inner: TaggerModel::load(path).map_err(py_err)?,
        })
    }

    /// Tag one definition; returns the frame and whether the concept was found.
    fn extract(&self, concept: &str, sentence: &str, basis: &PyBasis) -> PyResult<(PyFrame, bool)> {
        self.inner.check_basis(&basis.inner).map_err(py_err)?;
        let ex = frames::extract_frame(&self.inner, concept, sentence, &basis.inner);
        Ok((PyFrame { inner: ex.frame }, ex.concept_found))
    }
}

#[pyclass(name = "Transform", module = "pydefframe", frozen)]
struct PyTransform {
    inner: LinearTransform,
}

#[pymethods]
impl PyTransform {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyTransform {
            inner: LinearTransform::load(path).map_err(py_err)?,
        })
    }

    /// Identity transform over frames of width `dim`.
    #[staticmethod]
    fn identity_for_frames(dim: usize) -> Self {
        PyTransform {
            inner: LinearTransform::for_frames(dim),
        }
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(py_err)
    }

    #[getter]
    fn mode(&self) -> String {
        self.inner.mode().to_string()
    }

    fn apply(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.apply(&x).map_err(py_err)
    }

    fn apply_frame(&self, frame: &PyEncoded) -> PyResult<PyEncoded> {
        Ok(PyEncoded {
            inner: self.inner.apply_frame(&frame.inner).map_err(py_err)?,
        })
    }

    fn inverse(&self) -> PyResult<Self> {
        Ok(PyTransform {
            inner: self.inner.inverse().map_err(py_err)?,
        })
    }
}

#[pyfunction]
fn encode(frame: &PyFrame, basis: &PyBasis) -> PyEncoded {
    PyEncoded {
        inner: frames::encode(&frame.inner, &basis.inner).0,
    }
}

/// Masked frame cosine; returns `(score, degenerate)`.
#[pyfunction]
#[pyo3(signature = (a, b, mask_spec = "DF_all"))]
fn similarity(a: &PyEncoded, b: &PyEncoded, mask_spec: &str) -> PyResult<(f64, bool)> {
    let s = frames::frame_similarity(&a.inner, &b.inner, mask(mask_spec)?).map_err(py_err)?;
    Ok((s.score, s.degenerate))
}

/// Nearest basis terms per row: `[(row, [(term, cosine), ...]), ...]`.
#[pyfunction]
fn decode(frame: &PyEncoded, basis: &PyBasis, k: usize) -> PyResult<Vec<(String, Vec<(String, f64)>)>> {
    let rows = frames::decode(&frame.inner, &basis.inner, k).map_err(py_err)?;
    Ok(rows.into_iter().map(|r| (r.row.to_string(), r.terms)).collect())
}

#[pyfunction]
fn read_frames(path: &str) -> PyResult<Vec<PyFrame>> {
    let frames = frames::read_frames_file(path).map_err(py_err)?;
    Ok(frames.into_iter().map(|inner| PyFrame { inner }).collect())
}

#[pyfunction]
fn write_frames(path: &str, frames: Vec<PyFrame>) -> PyResult<()> {
    let frames: Vec<DefinitionFrame> = frames.into_iter().map(|f| f.inner).collect();
    frames::write_frames_file(path, &frames).map_err(py_err)
}

#[pyfunction]
fn read_encoded(path: &str) -> PyResult<Vec<PyEncoded>> {
    let (frames, _) = frames::read_encoded_file(path).map_err(py_err)?;
    Ok(frames.into_iter().map(|inner| PyEncoded { inner }).collect())
}

#[pyfunction]
fn write_encoded(path: &str, frames: Vec<PyEncoded>) -> PyResult<()> {
    let frames: Vec<EncodedFrame> = frames.into_iter().map(|f| f.inner).collect();
    let dim = frames.first().map_or(0, EncodedFrame::dim);
    frames::write_encoded_file(path, &frames, dim).map_err(py_err)
}

#[pyfunction]
fn spearman(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    sim_eval::spearman(&x, &y).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (x, y, n_perm = sim_eval::DEFAULT_PERMUTATIONS, seed = 0))]
fn permutation_pvalue(x: Vec<f64>, y: Vec<f64>, n_perm: usize, seed: u64) -> PyResult<f64> {
    sim_eval::permutation_pvalue(&x, &y, n_perm, seed).map_err(py_err)
}

#[pymodule]
fn pydefframe(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBasis>()?;
    m.add_class::<PyFrame>()?;
    m.add_class::<PyEncoded>()?;
    m.add_class::<PyTagger>()?;
    m.add_class::<PyTransform>()?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(similarity, m)?)?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    m.add_function(wrap_pyfunction!(read_frames, m)?)?;
    m.add_function(wrap_pyfunction!(write_frames, m)?)?;
    m.add_function(wrap_pyfunction!(read_encoded, m)?)?;
    m.add_function(wrap_pyfunction!(write_encoded, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_function(wrap_pyfunction!(permutation_pvalue, m)?)?;
    Ok(())
}
