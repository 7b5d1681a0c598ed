// JSON game and behaviour files.
//
// Game:      {"name": str, "nu": int, "nv": int, "mu": [[..]], "f": [[..]]}
// Behaviour: {"nu": int, "nv": int, "table": [u][v][a][b]}

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Behaviour, XorGame, PROB_TOL, RENORM_TOL};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct GameFile {
    name: String,
    nu: usize,
    nv: usize,
    mu: Vec<Vec<f64>>,
    f: Vec<Vec<i64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BehaviourFile {
    nu: usize,
    nv: usize,
    table: Vec<Vec<Vec<Vec<f64>>>>,
}

fn renormalize(values: &mut [f64], field: &str) -> Result<()> {
    if let Some((i, x)) = values
        .iter()
        .enumerate()
        .find(|(_, x)| !(**x >= 0.0) || !x.is_finite())
    {
        return Err(Error::invalid(
            format!("{field}[{i}]"),
            format!("{x} is not a probability"),
        ));
    }
    let sum: f64 = values.iter().sum();
    let dev = (sum - 1.0).abs();
    if dev <= PROB_TOL {
        return Ok(());
    }
    if dev < RENORM_TOL {
        values.iter_mut().for_each(|x| *x /= sum);
        return Ok(());
    }
    Err(Error::invalid(
        field,
        format!("entries sum to {sum}, expected 1"),
    ))
}

impl XorGame {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: GameFile = serde_json::from_str(s)?;
        if raw.mu.len() != raw.nu {
            return Err(Error::invalid(
                "mu",
                format!("expected {} rows (nu), found {}", raw.nu, raw.mu.len()),
            ));
        }
        if let Some((u, row)) = raw.mu.iter().enumerate().find(|(_, r)| r.len() != raw.nv) {
            return Err(Error::invalid(
                format!("mu[{u}]"),
                format!("expected {} columns (nv), found {}", raw.nv, row.len()),
            ));
        }
        let mut flat: Vec<f64> = raw.mu.iter().flatten().copied().collect();
        renormalize(&mut flat, "mu")?;
        let mu = if raw.nv == 0 {
            raw.mu
        } else {
            flat.chunks(raw.nv).map(<[f64]>::to_vec).collect()
        };
        let mut f = Vec::with_capacity(raw.f.len());
        for (u, row) in raw.f.iter().enumerate() {
            let mut out = Vec::with_capacity(row.len());
            for (v, &bit) in row.iter().enumerate() {
                if bit != 0 && bit != 1 {
                    return Err(Error::invalid(
                        format!("f[{u}][{v}]"),
                        format!("{bit} is not a bit"),
                    ));
                }
                out.push(bit as u8);
            }
            f.push(out);
        }
        XorGame::new(raw.name, mu, f)
    }

    pub fn to_json_string(&self) -> String {
        let raw = GameFile {
            name: self.name.clone(),
            nu: self.nu,
            nv: self.nv,
            mu: self.mu.clone(),
            f: self
                .f
                .iter()
                .map(|r| r.iter().map(|&b| i64::from(b)).collect())
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("game serializes")
    }
}

impl Behaviour {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: BehaviourFile = serde_json::from_str(s)?;
        if raw.table.len() != raw.nu {
            return Err(Error::invalid(
                "table",
                format!("expected {} rows (nu), found {}", raw.nu, raw.table.len()),
            ));
        }
        let mut table = Vec::with_capacity(raw.nu * raw.nv);
        for (u, row) in raw.table.iter().enumerate() {
            if row.len() != raw.nv {
                return Err(Error::invalid(
                    format!("table[{u}]"),
                    format!("expected {} entries (nv), found {}", raw.nv, row.len()),
                ));
            }
            for (v, slice) in row.iter().enumerate() {
                let field = format!("table[{u}][{v}]");
                if slice.len() != 2 || slice.iter().any(|r| r.len() != 2) {
                    return Err(Error::invalid(
                        field,
                        "each slice must be a 2x2 array indexed [a][b]",
                    ));
                }
                let mut vals = [slice[0][0], slice[0][1], slice[1][0], slice[1][1]];
                renormalize(&mut vals, &field)?;
                table.push([[vals[0], vals[1]], [vals[2], vals[3]]]);
            }
        }
        Behaviour::new(raw.nu, raw.nv, table)
    }

    pub fn to_json_string(&self) -> String {
        let raw = BehaviourFile {
            nu: self.nu,
            nv: self.nv,
            table: self
                .to_nested()
                .into_iter()
                .map(|row| {
                    row.into_iter()
                        .map(|s| s.iter().map(|r| r.to_vec()).collect())
                        .collect()
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("behaviour serializes")
    }
}

pub fn load_game(path: impl AsRef<Path>) -> Result<XorGame> {
    let text = std::fs::read_to_string(path)?;
    XorGame::from_json_str(&text)
}

pub fn load_behaviour(path: impl AsRef<Path>) -> Result<Behaviour> {
    let text = std::fs::read_to_string(path)?;
    Behaviour::from_json_str(&text)
}
