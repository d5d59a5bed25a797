//! Result persistence. Every file is written to a temporary file in the
//! target directory and renamed into place.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    let fail = |e: std::io::Error| CliError::Output(format!("{}: {e}", dir.join(name).display()));
    std::fs::create_dir_all(dir).map_err(fail)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(dir.join(name)).map_err(|e| fail(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    text.push('\n');
    write_atomic(dir, name, text.as_bytes())
}

/// Shortest representation that parses back to the same `f64`.
pub fn float(x: f64) -> String {
    format!("{x:?}")
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

pub fn csv<I: IntoIterator<Item = Vec<String>>>(header: &[&str], rows: I) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let fields: Vec<String> = row.iter().map(|f| quote(f)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

const PREAMBLE: &str = "set datafile separator ','\nset key autotitle columnhead\n";

pub fn trace_script() -> String {
    format!(
        "{PREAMBLE}set xlabel 'iteration'\nset logscale y\nset ylabel 'residual'\n\
         plot 'trace.csv' using 1:3 with lines title 'residual'\n"
    )
}

pub fn function_script(file: &str, dim: usize) -> String {
    let body = match dim {
        1 => format!("set xlabel 'x0'\nplot '{file}' using 1:2 with linespoints title 'u'\n"),
        2 => format!(
            "set xlabel 'x0'\nset ylabel 'x1'\nset view map\n\
             splot '{file}' using 1:2:3 with points pointtype 5 palette title 'u'\n"
        ),
        _ => format!(
            "set xlabel 'vertex (row-major)'\nplot '{file}' using 0:{} with impulses title 'u'\n",
            dim + 1
        ),
    };
    format!("{PREAMBLE}{body}")
}

pub fn fiber_script() -> String {
    format!(
        "{PREAMBLE}set xlabel 't'\nset ylabel 'psi'\n\
         plot 'fiber.csv' using 1:2 with lines title 'psi', \\\n     \
         '' using ($4 == 1 ? $1 : 1/0):2 with points pointtype 7 title 't_u'\n"
    )
}

pub fn sweep_script(axis: &str) -> String {
    format!(
        "{PREAMBLE}set xlabel '{axis}'\nset ylabel 'b'\nset y2label 'S'\nset y2tics\n\
         plot 'sweep.csv' using 1:2 with linespoints title 'b', \\\n     \
         '' using 1:3 axes x1y2 with linespoints title 'S'\n"
    )
}
