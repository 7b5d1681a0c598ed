//! Finite two-player XOR games and the behaviours that play them.
//!
//! A game is won when `a ^ b == f(u, v)`. Behaviours are conditional
//! probability tables `P(a, b | u, v)` stored in `[u][v][a][b]` order.

mod file;

use serde::Serialize;

use crate::error::{Error, Result};

pub use file::{load_behaviour, load_game};

/// Absolute tolerance for every probability check.
pub const PROB_TOL: f64 = 1e-12;

/// Deviations below this are renormalized by the loaders; larger ones are rejected.
pub const RENORM_TOL: f64 = 1e-9;

pub type Bit = u8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XorGame {
    name: String,
    nu: usize,
    nv: usize,
    mu: Vec<Vec<f64>>,
    f: Vec<Vec<Bit>>,
}

impl XorGame {
    pub fn new(name: impl Into<String>, mu: Vec<Vec<f64>>, f: Vec<Vec<Bit>>) -> Result<Self> {
        let nu = mu.len();
        if nu == 0 {
            return Err(Error::invalid(
                "nu",
                "game needs at least one Alice question",
            ));
        }
        let nv = mu[0].len();
        if nv == 0 {
            return Err(Error::invalid("nv", "game needs at least one Bob question"));
        }
        if f.len() != nu {
            return Err(Error::invalid(
                "f",
                format!("expected {nu} rows, found {}", f.len()),
            ));
        }
        let mut total = 0.0;
        for (u, row) in mu.iter().enumerate() {
            if row.len() != nv {
                return Err(Error::invalid(
                    format!("mu[{u}]"),
                    format!("expected {nv} columns, found {}", row.len()),
                ));
            }
            for (v, &m) in row.iter().enumerate() {
                if !(m >= 0.0) || !m.is_finite() {
                    return Err(Error::invalid(
                        format!("mu[{u}][{v}]"),
                        format!("{m} is not a probability"),
                    ));
                }
                total += m;
            }
        }
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::invalid(
                "mu",
                format!("entries sum to {total}, expected 1"),
            ));
        }
        for (u, row) in f.iter().enumerate() {
            if row.len() != nv {
                return Err(Error::invalid(
                    format!("f[{u}]"),
                    format!("expected {nv} columns, found {}", row.len()),
                ));
            }
            for (v, &bit) in row.iter().enumerate() {
                if bit > 1 {
                    return Err(Error::invalid(
                        format!("f[{u}][{v}]"),
                        format!("{bit} is not a bit"),
                    ));
                }
            }
        }
        Ok(XorGame {
            name: name.into(),
            nu,
            nv,
            mu,
            f,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn mu(&self, u: usize, v: usize) -> f64 {
        self.mu[u][v]
    }

    pub fn predicate(&self, u: usize, v: usize) -> Bit {
        self.f[u][v]
    }

    pub fn mu_matrix(&self) -> &[Vec<f64>] {
        &self.mu
    }

    pub fn predicate_matrix(&self) -> &[Vec<Bit>] {
        &self.f
    }

    /// Signed weights `mu(u,v) (-1)^f(u,v)` of the bias functional.
    pub fn signed_weights(&self) -> Vec<Vec<f64>> {
        self.mu
            .iter()
            .zip(&self.f)
            .map(|(mrow, frow)| {
                mrow.iter()
                    .zip(frow)
                    .map(|(&m, &bit)| if bit == 0 { m } else { -m })
                    .collect()
            })
            .collect()
    }

    /// Whether outputs `(a, b)` win on questions `(u, v)`.
    pub fn wins(&self, u: usize, v: usize, a: Bit, b: Bit) -> bool {
        a ^ b == self.f[u][v]
    }

    fn check_dims(&self, b: &Behaviour) -> Result<()> {
        if self.nu != b.nu || self.nv != b.nv {
            return Err(Error::Dimension(format!(
                "game `{}` is {}x{} but behaviour is {}x{}",
                self.name, self.nu, self.nv, b.nu, b.nv
            )));
        }
        Ok(())
    }

    /// Rename, keeping everything else.
    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// The CHSH game: uniform questions, win iff `a ^ b = u v`.
pub fn make_chsh() -> XorGame {
    XorGame::new(
        "chsh",
        vec![vec![0.25, 0.25], vec![0.25, 0.25]],
        vec![vec![0, 0], vec![0, 1]],
    )
    .expect("chsh is a valid game")
}

/// Chained Bell game with `n` settings per party.
///
/// The referee samples uniformly from the `2n` pairs `(j, j)` and
/// `(j + 1 mod n, j)`; all constraints ask for equal outputs except the
/// wrap-around pair `(0, n - 1)`.
pub fn make_chained(n: usize) -> Result<XorGame> {
    if n < 2 {
        return Err(Error::invalid(
            "N",
            format!("chained game needs N >= 2, got {n}"),
        ));
    }
    let w = 1.0 / (2 * n) as f64;
    let mut mu = vec![vec![0.0; n]; n];
    let mut f = vec![vec![0; n]; n];
    for j in 0..n {
        mu[j][j] = w;
        mu[(j + 1) % n][j] = w;
    }
    f[0][n - 1] = 1;
    XorGame::new(format!("chained:{n}"), mu, f)
}

/// Conditional table `P(a, b | u, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Behaviour {
    nu: usize,
    nv: usize,
    table: Vec<[[f64; 2]; 2]>,
}

impl Behaviour {
    /// Build from slices indexed `[u][v]`, each holding `[a][b]`.
    pub fn new(nu: usize, nv: usize, table: Vec<[[f64; 2]; 2]>) -> Result<Self> {
        if nu == 0 || nv == 0 {
            return Err(Error::invalid(
                "table",
                "behaviour needs at least one question per party",
            ));
        }
        if table.len() != nu * nv {
            return Err(Error::invalid(
                "table",
                format!("expected {} slices, found {}", nu * nv, table.len()),
            ));
        }
        for (idx, slice) in table.iter().enumerate() {
            let (u, v) = (idx / nv, idx % nv);
            let mut sum = 0.0;
            for (a, row) in slice.iter().enumerate() {
                for (b, &p) in row.iter().enumerate() {
                    if !(p >= 0.0) || !p.is_finite() {
                        return Err(Error::invalid(
                            format!("table[{u}][{v}][{a}][{b}]"),
                            format!("{p} is not a probability"),
                        ));
                    }
                    sum += p;
                }
            }
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(Error::invalid(
                    format!("table[{u}][{v}]"),
                    format!("entries sum to {sum}, expected 1"),
                ));
            }
        }
        Ok(Behaviour { nu, nv, table })
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn prob(&self, u: usize, v: usize, a: Bit, b: Bit) -> f64 {
        self.table[u * self.nv + v][a as usize][b as usize]
    }

    pub fn slice(&self, u: usize, v: usize) -> &[[f64; 2]; 2] {
        &self.table[u * self.nv + v]
    }

    pub fn uniform(nu: usize, nv: usize) -> Self {
        Behaviour {
            nu,
            nv,
            table: vec![[[0.25; 2]; 2]; nu * nv],
        }
    }

    /// Behaviour with uniform marginals and the given correlators:
    /// `P(a, b | u, v) = (1 + (-1)^(a^b) E_uv) / 4`.
    pub fn from_correlators(e: &CorrelatorMatrix) -> Result<Self> {
        let nu = e.e.len();
        let nv = e.e.first().map_or(0, Vec::len);
        let mut table = Vec::with_capacity(nu * nv);
        for row in &e.e {
            for &c in row {
                let same = (1.0 + c) / 4.0;
                let diff = (1.0 - c) / 4.0;
                table.push([
                    [same.max(0.0), diff.max(0.0)],
                    [diff.max(0.0), same.max(0.0)],
                ]);
            }
        }
        Behaviour::new(nu, nv, table)
    }

    /// Raw `[u][v][a][b]` nesting, as written to behaviour files.
    pub fn to_nested(&self) -> Vec<Vec<[[f64; 2]; 2]>> {
        self.table.chunks(self.nv).map(<[_]>::to_vec).collect()
    }
}

/// Canonical quantum-optimal CHSH behaviour: correlators `+1/sqrt 2` on
/// three question pairs and `-1/sqrt 2` on `(1, 1)`, uniform marginals.
pub fn quantum_optimal_chsh() -> Behaviour {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let e = CorrelatorMatrix {
        e: vec![vec![c, c], vec![c, -c]],
    };
    Behaviour::from_correlators(&e).expect("tsirelson correlators are valid")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelatorMatrix {
    pub e: Vec<Vec<f64>>,
}

impl CorrelatorMatrix {
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.e[u][v]
    }
}

/// `E_uv = sum_{a,b} (-1)^(a^b) P(a, b | u, v)`.
pub fn correlators(b: &Behaviour) -> CorrelatorMatrix {
    let e = (0..b.nu)
        .map(|u| {
            (0..b.nv)
                .map(|v| {
                    let s = b.slice(u, v);
                    s[0][0] + s[1][1] - s[0][1] - s[1][0]
                })
                .collect()
        })
        .collect();
    CorrelatorMatrix { e }
}

/// Compensated (Neumaier) summation; keeps sums of equal weights like
/// `2N * 1/(2N)` exact.
pub(crate) fn exact_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Winning probability of `b` on `g`.
///
/// Weights such as `1/6` are stored with rounding error proportional to their
/// size, so when the game is mostly won the value is taken as one minus the
/// (smaller) losing mass.
pub fn game_value(g: &XorGame, b: &Behaviour) -> Result<f64> {
    g.check_dims(b)?;
    let mut wins = Vec::with_capacity(g.nu * g.nv);
    let mut losses = Vec::with_capacity(g.nu * g.nv);
    for u in 0..g.nu {
        for v in 0..g.nv {
            let m = g.mu[u][v];
            if m == 0.0 {
                continue;
            }
            let s = b.slice(u, v);
            let (same, diff) = (s[0][0] + s[1][1], s[0][1] + s[1][0]);
            let (win, lose) = if g.f[u][v] == 0 {
                (same, diff)
            } else {
                (diff, same)
            };
            wins.push(m * win);
            losses.push(m * lose);
        }
    }
    let (w, l) = (exact_sum(wins), exact_sum(losses));
    Ok(if l < w { 1.0 - l } else { w })
}

/// XOR-game bias `sum mu (-1)^f E_uv`; satisfies `omega = (1 + bias) / 2`.
pub fn bias(g: &XorGame, b: &Behaviour) -> Result<f64> {
    g.check_dims(b)?;
    let e = correlators(b);
    let w = g.signed_weights();
    Ok(exact_sum(w.iter().zip(&e.e).flat_map(|(wr, er)| {
        wr.iter().zip(er).map(|(x, y)| x * y)
    })))
}

/// CHSH expression `S = E00 + E01 + E10 - E11`.
pub fn chsh_s(b: &Behaviour) -> Result<f64> {
    if b.nu != 2 || b.nv != 2 {
        return Err(Error::Dimension(format!(
            "CHSH expression needs a 2x2 behaviour, got {}x{}",
            b.nu, b.nv
        )));
    }
    let e = correlators(b);
    Ok(e.get(0, 0) + e.get(0, 1) + e.get(1, 0) - e.get(1, 1))
}

/// Predicate box: on every question pair, uniformly random outputs whose
/// XOR equals `f(u, v)`. For CHSH this is the PR box.
pub fn pr_box(g: &XorGame) -> Behaviour {
    let table = (0..g.nu)
        .flat_map(|u| (0..g.nv).map(move |v| (u, v)))
        .map(|(u, v)| {
            if g.f[u][v] == 0 {
                [[0.5, 0.0], [0.0, 0.5]]
            } else {
                [[0.0, 0.5], [0.5, 0.0]]
            }
        })
        .collect();
    Behaviour {
        nu: g.nu,
        nv: g.nv,
        table,
    }
}

/// Deterministic local strategy `a = amap[u]`, `b = bmap[v]`.
pub fn deterministic_behaviour(g: &XorGame, amap: &[Bit], bmap: &[Bit]) -> Result<Behaviour> {
    if amap.len() != g.nu {
        return Err(Error::Dimension(format!(
            "amap has length {}, game has nu = {}",
            amap.len(),
            g.nu
        )));
    }
    if bmap.len() != g.nv {
        return Err(Error::Dimension(format!(
            "bmap has length {}, game has nv = {}",
            bmap.len(),
            g.nv
        )));
    }
    if let Some(bad) = amap.iter().chain(bmap).find(|&&x| x > 1) {
        return Err(Error::invalid("strategy", format!("{bad} is not a bit")));
    }
    let mut table = Vec::with_capacity(g.nu * g.nv);
    for &a in amap {
        for &b in bmap {
            let mut s = [[0.0; 2]; 2];
            s[a as usize][b as usize] = 1.0;
            table.push(s);
        }
    }
    Ok(Behaviour {
        nu: g.nu,
        nv: g.nv,
        table,
    })
}

/// White-noise mixture `v * b + (1 - v) * uniform`.
pub fn mix_with_uniform(b: &Behaviour, visibility: f64) -> Result<Behaviour> {
    if !(0.0..=1.0).contains(&visibility) {
        return Err(Error::invalid(
            "visibility",
            format!("{visibility} is outside [0, 1]"),
        ));
    }
    let noise = (1.0 - visibility) * 0.25;
    let table = b
        .table
        .iter()
        .map(|s| {
            let mut out = [[0.0; 2]; 2];
            for a in 0..2 {
                for bb in 0..2 {
                    out[a][bb] = visibility * s[a][bb] + noise;
                }
            }
            out
        })
        .collect();
    Ok(Behaviour {
        nu: b.nu,
        nv: b.nv,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn chsh_layout() {
        let g = make_chsh();
        assert_eq!(g.predicate_matrix(), &[vec![0, 0], vec![0, 1]]);
        assert_eq!(g.mu_matrix(), &[vec![0.25, 0.25], vec![0.25, 0.25]]);
        assert!(g.wins(0, 0, 1, 1));
        assert!(!g.wins(0, 0, 0, 1));
        assert!(g.wins(1, 1, 0, 1));
        assert!(!g.wins(1, 1, 1, 1));
    }

    #[test]
    fn chained_support() {
        let g = make_chained(3).unwrap();
        let nonzero: Vec<f64> = g
            .mu_matrix()
            .iter()
            .flatten()
            .copied()
            .filter(|&m| m > 0.0)
            .collect();
        assert_eq!(nonzero.len(), 6);
        assert!(nonzero.iter().all(|&m| (m - 1.0 / 6.0).abs() < 1e-15));
        for u in 0..3 {
            for v in 0..3 {
                let expected = u8::from((u, v) == (0, 2));
                assert_eq!(g.predicate(u, v), expected, "f[{u}][{v}]");
            }
        }
        assert!(make_chained(1).is_err());
    }

    #[test]
    fn correlator_slices() {
        let corr = Behaviour::new(1, 1, vec![[[0.5, 0.0], [0.0, 0.5]]]).unwrap();
        assert_eq!(correlators(&corr).get(0, 0), 1.0);
        assert_eq!(correlators(&Behaviour::uniform(1, 1)).get(0, 0), 0.0);
        let q = correlators(&quantum_optimal_chsh());
        let c = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(q.get(0, 0), c, epsilon = 1e-15);
        assert_abs_diff_eq!(q.get(1, 1), -c, epsilon = 1e-15);
    }

    #[test]
    fn chsh_values() {
        let g = make_chsh();
        let pr = pr_box(&g);
        assert_eq!(game_value(&g, &pr).unwrap(), 1.0);
        assert_eq!(bias(&g, &pr).unwrap(), 1.0);
        assert_eq!(chsh_s(&pr).unwrap(), 4.0);

        let uni = Behaviour::uniform(2, 2);
        assert_eq!(game_value(&g, &uni).unwrap(), 0.5);
        assert_eq!(bias(&g, &uni).unwrap(), 0.0);

        let q = quantum_optimal_chsh();
        assert_abs_diff_eq!(
            game_value(&g, &q).unwrap(),
            0.853_553_390_593_273_7,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            bias(&g, &q).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            chsh_s(&q).unwrap(),
            2.0 * std::f64::consts::SQRT_2,
            epsilon = 1e-12
        );

        let det = deterministic_behaviour(&g, &[0, 0], &[0, 0]).unwrap();
        assert_eq!(chsh_s(&det).unwrap(), 2.0);
        assert_eq!(game_value(&g, &det).unwrap(), 0.75);
        let det = deterministic_behaviour(&g, &[0, 1], &[0, 0]).unwrap();
        assert_eq!(game_value(&g, &det).unwrap(), 0.75);
    }

    #[test]
    fn pr_box_marginals_are_uniform() {
        let g = make_chained(4).unwrap();
        let pr = pr_box(&g);
        assert_eq!(game_value(&g, &pr).unwrap(), 1.0);
        for u in 0..4 {
            for v in 0..4 {
                let s = pr.slice(u, v);
                assert_eq!(s[0][0] + s[0][1], 0.5);
                assert_eq!(s[0][0] + s[1][0], 0.5);
            }
        }
    }

    #[test]
    fn mixing_scales_bias() {
        let g = make_chsh();
        let pr = pr_box(&g);
        assert_eq!(mix_with_uniform(&pr, 1.0).unwrap(), pr);
        assert_eq!(
            game_value(&g, &mix_with_uniform(&pr, 0.0).unwrap()).unwrap(),
            0.5
        );
        assert_abs_diff_eq!(
            game_value(&g, &mix_with_uniform(&pr, 0.5).unwrap()).unwrap(),
            0.75,
            epsilon = 1e-12
        );
        assert!(mix_with_uniform(&pr, 1.5).is_err());
        assert!(mix_with_uniform(&pr, -0.1).is_err());
    }

    #[test]
    fn dimension_errors() {
        let g = make_chsh();
        let b = Behaviour::uniform(3, 2);
        assert!(matches!(game_value(&g, &b), Err(Error::Dimension(_))));
        assert!(matches!(bias(&g, &b), Err(Error::Dimension(_))));
        assert!(chsh_s(&b).is_err());
        assert!(deterministic_behaviour(&g, &[0], &[0, 0]).is_err());
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(XorGame::new("x", vec![vec![0.5, 0.4]], vec![vec![0, 0]]).is_err());
        assert!(XorGame::new("x", vec![vec![0.5, 0.5]], vec![vec![0, 2]]).is_err());
        assert!(XorGame::new("x", vec![vec![1.5, -0.5]], vec![vec![0, 0]]).is_err());
        assert!(XorGame::new("x", vec![], vec![]).is_err());
        assert!(Behaviour::new(1, 1, vec![[[0.5, 0.5], [0.5, 0.0]]]).is_err());
    }
}
