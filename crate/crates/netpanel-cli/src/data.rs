//! File ingestion: adjacency matrices (one headerless 0/1 matrix per wave)
//! and covariate files (CSV with header for nodal attributes, headerless
//! square numeric matrix for dyadic ones, named by file stem).

use std::path::Path;

use netpanel::{Covariates, DyadCovariate, Error, Network, Panel, Result};

fn file_err(path: &Path, message: impl Into<String>) -> Error {
    Error::DataFile {
        file: path.display().to_string(),
        message: message.into(),
    }
}

fn split_row(line: &str) -> Vec<&str> {
    if line.trim_start().starts_with('#') {
        return Vec::new();
    }
    line.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .collect()
}

/// Parse one headerless whitespace/comma-separated 0/1 adjacency matrix.
pub fn load_wave(path: &Path) -> Result<Network> {
    let text = std::fs::read_to_string(path).map_err(|e| file_err(path, e.to_string()))?;
    let rows: Vec<Vec<&str>> = text
        .lines()
        .map(split_row)
        .filter(|r| !r.is_empty())
        .collect();
    let n = rows.len();
    let mut net = Network::empty(n);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(file_err(
                path,
                format!("row {i} has {} entries, expected {n}", row.len()),
            ));
        }
        for (j, tok) in row.iter().enumerate() {
            match *tok {
                "0" => {}
                "1" => {
                    if i == j {
                        return Err(file_err(path, format!("self-loop at node {i}")));
                    }
                    net.set(i, j, true);
                }
                other => {
                    return Err(file_err(
                        path,
                        format!("entry at ({i}, {j}) is `{other}`, expected 0 or 1"),
                    ))
                }
            }
        }
    }
    Ok(net)
}

/// Load a covariate file into the store. A file whose first line contains a
/// non-numeric token is a nodal CSV (header row of covariate names, one row
/// per node; non-numeric columns become factors). Otherwise it is a square
/// dyadic matrix registered under the file stem.
pub fn load_covariate_file(path: &Path, n: usize, cov: &mut Covariates) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| file_err(path, e.to_string()))?;
    let lines: Vec<Vec<&str>> = text
        .lines()
        .map(split_row)
        .filter(|r| !r.is_empty())
        .collect();
    if lines.is_empty() {
        return Err(file_err(path, "empty covariate file"));
    }
    let has_header = lines[0].iter().any(|t| t.parse::<f64>().is_err());
    if has_header {
        let names: Vec<String> = lines[0].iter().map(|s| s.to_string()).collect();
        let body = &lines[1..];
        if body.len() != n {
            return Err(file_err(
                path,
                format!("{} data rows for {n} nodes", body.len()),
            ));
        }
        for (r, row) in body.iter().enumerate() {
            if row.len() != names.len() {
                return Err(file_err(
                    path,
                    format!("row {} has {} fields, header has {}", r + 1, row.len(), names.len()),
                ));
            }
        }
        for (c, name) in names.iter().enumerate() {
            let column: Vec<&str> = body.iter().map(|row| row[c]).collect();
            let numeric: Option<Vec<f64>> =
                column.iter().map(|t| t.parse::<f64>().ok()).collect();
            match numeric {
                Some(values) => cov.insert_numeric(name, values),
                None => cov.insert_factor(
                    name,
                    column.into_iter().map(|s| s.to_string()).collect(),
                ),
            }
        }
    } else {
        if lines.len() != n {
            return Err(file_err(
                path,
                format!("dyadic matrix has {} rows for {n} nodes", lines.len()),
            ));
        }
        let mut values = Vec::with_capacity(n * n);
        for (i, row) in lines.iter().enumerate() {
            if row.len() != n {
                return Err(file_err(
                    path,
                    format!("dyadic matrix row {i} has {} entries, expected {n}", row.len()),
                ));
            }
            for tok in row {
                values.push(tok.parse::<f64>().map_err(|_| {
                    file_err(path, format!("non-numeric entry `{tok}` in dyadic matrix"))
                })?);
            }
        }
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .ok_or_else(|| file_err(path, "cannot derive covariate name from path"))?;
        cov.insert_dyadic(&stem, DyadCovariate::new(n, values)?);
    }
    Ok(())
}

/// Assemble a panel from wave and covariate file paths.
pub fn load_panel(waves: &[std::path::PathBuf], covariates: &[std::path::PathBuf]) -> Result<Panel> {
    let mut nets: Vec<Network> = Vec::with_capacity(waves.len());
    for (t, path) in waves.iter().enumerate() {
        let net = load_wave(path)?;
        if t > 0 && net.n() != nets[0].n() {
            return Err(file_err(
                path,
                format!("wave has {} nodes, first wave has {}", net.n(), nets[0].n()),
            ));
        }
        nets.push(net);
    }
    if nets.is_empty() {
        return Err(Error::TooFewWaves(0));
    }
    let n = nets[0].n();
    let mut cov = Covariates::new();
    for path in covariates {
        load_covariate_file(path, n, &mut cov)?;
    }
    Panel::new(nets, cov)
}

/// Render a network back to the same headerless matrix format.
pub fn format_wave(net: &Network) -> String {
    let n = net.n();
    let mut out = String::with_capacity(n * (2 * n + 1));
    for i in 0..n {
        for j in 0..n {
            if j > 0 {
                out.push(' ');
            }
            out.push(if net.get(i, j) { '1' } else { '0' });
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn tmp(content: &str, name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("netpanel-data-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn wave_roundtrip() {
        let path = tmp("0 1 0\n0 0 1\n1 0 0\n", "wave.txt");
        let net = load_wave(&path).unwrap();
        assert_eq!(net.edge_count(), 3);
        assert!(net.get(0, 1) && net.get(1, 2) && net.get(2, 0));
        assert_eq!(format_wave(&net), "0 1 0\n0 0 1\n1 0 0\n");
    }

    #[test]
    fn wave_rejects_non_binary_with_location() {
        let path = tmp("0 1\n2 0\n", "bad.txt");
        let err = load_wave(&path).unwrap_err().to_string();
        assert!(err.contains("(1, 0)") && err.contains("`2`"), "{err}");
    }

    #[test]
    fn wave_rejects_self_loop() {
        let path = tmp("1 0\n0 0\n", "loop.txt");
        assert!(load_wave(&path).unwrap_err().to_string().contains("self-loop"));
    }

    #[test]
    fn nodal_csv_mixes_numeric_and_factor() {
        let path = tmp("age,sex\n10,boy\n11,girl\n12,girl\n", "attrs.csv");
        let mut cov = Covariates::new();
        load_covariate_file(&path, 3, &mut cov).unwrap();
        assert_eq!(cov.numeric("age").unwrap(), &[10.0, 11.0, 12.0]);
        assert_eq!(cov.factor("sex").unwrap()[0], "boy");
    }

    #[test]
    fn headerless_square_matrix_is_dyadic() {
        let path = tmp("0 1\n1 0\n", "primary.txt");
        let mut cov = Covariates::new();
        load_covariate_file(&path, 2, &mut cov).unwrap();
        assert_eq!(cov.dyadic("primary").unwrap().get(0, 1), 1.0);
    }

    #[test]
    fn mismatched_wave_sizes_name_the_file() {
        let a = tmp("0 1\n0 0\n", "w1.txt");
        let b = tmp("0 1 0\n0 0 0\n0 0 0\n", "w2.txt");
        let err = load_panel(&[a, b.clone()], &[]).unwrap_err().to_string();
        assert!(err.contains("w2.txt"), "{err}");
    }
}
