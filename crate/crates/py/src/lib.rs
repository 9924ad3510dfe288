use pyo3::prelude::*;

#[pymodule]
fn fdnoma_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
