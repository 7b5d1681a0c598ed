//! The side-information channel `X -> G` induced by an XOR game.
//!
//! The referee publishes `r = x ^ f(u, v)` and the controller keeps only
//! `G = a ^ b ^ r`, so `G == x` exactly when the game is won. The channel
//! is therefore binary symmetric with success probability equal to the
//! game value. Information quantities here are in bits.

use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::games::{game_value, Behaviour, Bit, XorGame};

/// Binary symmetric channel, parametrized by `p = P[G = X]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinaryChannel {
    p: f64,
    flipped: bool,
}

impl BinaryChannel {
    pub fn new(p: f64) -> Result<Self> {
        check_prob("p", p)?;
        Ok(BinaryChannel { p, flipped: false })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn flipped(&self) -> bool {
        self.flipped
    }

    /// `H(G)`: the record is uniform because `X` is.
    pub fn h_g(&self) -> f64 {
        1.0
    }

    /// `H(G | X) = h2(p)`.
    pub fn h_g_given_x(&self) -> f64 {
        h2(self.p)
    }

    pub fn mutual_information(&self) -> f64 {
        mutual_information(self)
    }

    pub fn is_oriented(&self) -> bool {
        self.p >= 0.5
    }
}

fn check_prob(field: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("{p} is outside [0, 1]")))
    }
}

pub(crate) fn h2(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}

/// Binary entropy in bits, with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    check_prob("p", p)?;
    Ok(h2(p))
}

/// `I(X:G) = H(G) - H(G|X) = 1 - h2(p)`.
pub fn mutual_information(c: &BinaryChannel) -> f64 {
    c.h_g() - c.h_g_given_x()
}

/// `r = x ^ f(u, v)`.
pub fn referee_encode(x: Bit, u: usize, v: usize, g: &XorGame) -> Result<Bit> {
    if u >= g.nu() || v >= g.nv() {
        return Err(Error::invalid(
            "question",
            format!("({u}, {v}) out of range for a {}x{} game", g.nu(), g.nv()),
        ));
    }
    if x > 1 {
        return Err(Error::invalid("x", format!("{x} is not a bit")));
    }
    Ok(x ^ g.predicate(u, v))
}

/// Compressed controller bit `G = a ^ b ^ r`.
pub fn compress(a: Bit, b: Bit, r: Bit) -> Bit {
    a ^ b ^ r
}

pub fn induced_channel(g: &XorGame, b: &Behaviour) -> Result<BinaryChannel> {
    BinaryChannel::new(game_value(g, b)?.clamp(0.0, 1.0))
}

/// Symmetric noise of strength `delta` on the controller bit:
/// `p_eff = 1/2 + (1 - 2 delta)(p - 1/2)`.
pub fn apply_noise(p: f64, delta: f64) -> Result<f64> {
    check_prob("p", p)?;
    if !(0.0..=0.5).contains(&delta) {
        return Err(Error::invalid(
            "delta",
            format!("{delta} is outside [0, 1/2]"),
        ));
    }
    Ok(0.5 + (1.0 - 2.0 * delta) * (p - 0.5))
}

/// Flip the record if that makes it a better predictor; ties keep the identity.
pub fn orient(p: f64) -> Result<BinaryChannel> {
    check_prob("p", p)?;
    let flipped = p < 0.5;
    Ok(BinaryChannel {
        p: if flipped { 1.0 - p } else { p },
        flipped,
    })
}

/// Channel for any binary prediction task with the given success probability.
pub fn predicate_channel(success: f64) -> Result<BinaryChannel> {
    check_prob("success", success)?;
    BinaryChannel::new(success)
}

/// One round of the embedded game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RoundRecord {
    pub x: Bit,
    pub u: usize,
    pub v: usize,
    pub a: Bit,
    pub b: Bit,
    pub r: Bit,
    pub g: Bit,
    pub e: Bit,
    pub won: bool,
}

impl RoundRecord {
    /// Completes a round from the microstate, questions and outputs.
    pub fn assemble(game: &XorGame, x: Bit, u: usize, v: usize, a: Bit, b: Bit) -> Result<Self> {
        let r = referee_encode(x, u, v, game)?;
        let g = compress(a, b, r);
        let e = a ^ b ^ game.predicate(u, v);
        Ok(RoundRecord {
            x,
            u,
            v,
            a,
            b,
            r,
            g,
            e,
            won: e == 0,
        })
    }

    /// `r = x^f`, `g = a^b^r`, `e = a^b^f` and `won <=> e = 0 <=> g = x`.
    pub fn is_consistent(&self, game: &XorGame) -> bool {
        let f = game.predicate(self.u, self.v);
        self.r == self.x ^ f
            && self.g == self.a ^ self.b ^ self.r
            && self.e == self.a ^ self.b ^ f
            && self.won == (self.e == 0)
            && self.won == (self.g == self.x)
    }
}

/// Exact joint distribution of `(x, u, v, a, b)` with uniform `x`, skipping
/// zero-probability outcomes.
pub fn joint_distribution(g: &XorGame, b: &Behaviour) -> Result<Vec<(RoundRecord, f64)>> {
    if g.nu() != b.nu() || g.nv() != b.nv() {
        return Err(Error::Dimension(format!(
            "game is {}x{}, behaviour is {}x{}",
            g.nu(),
            g.nv(),
            b.nu(),
            b.nv()
        )));
    }
    let mut out = Vec::new();
    for x in 0..2u8 {
        for u in 0..g.nu() {
            for v in 0..g.nv() {
                let m = g.mu(u, v);
                for a in 0..2u8 {
                    for bb in 0..2u8 {
                        let w = 0.5 * m * b.prob(u, v, a, bb);
                        if w > 0.0 {
                            out.push((RoundRecord::assemble(g, x, u, v, a, bb)?, w));
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Channel statistics computed by exact enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnumeratedChannel {
    /// `P[G = x | X = x]` for `x = 0, 1`.
    pub correct_given_x: [f64; 2],
    pub p_g0: f64,
    pub p_win: f64,
}

pub fn enumerate_channel(g: &XorGame, b: &Behaviour) -> Result<EnumeratedChannel> {
    let joint = joint_distribution(g, b)?;
    let mut px = [0.0; 2];
    let mut correct = [0.0; 2];
    let mut p_g0 = 0.0;
    let mut p_win = 0.0;
    for (rec, w) in joint {
        px[rec.x as usize] += w;
        if rec.g == rec.x {
            correct[rec.x as usize] += w;
        }
        if rec.g == 0 {
            p_g0 += w;
        }
        if rec.won {
            p_win += w;
        }
    }
    Ok(EnumeratedChannel {
        correct_given_x: [correct[0] / px[0], correct[1] / px[1]],
        p_g0,
        p_win,
    })
}

/// Draws rounds of the embedded game.
///
/// Questions and outputs are drawn by [`RoundSampler::draw_transcript`],
/// which never sees the microstate.
#[derive(Debug, Clone)]
pub struct RoundSampler<'a> {
    game: &'a XorGame,
    behaviour: &'a Behaviour,
    pairs: Vec<(usize, usize)>,
    cumulative: Vec<f64>,
}

impl<'a> RoundSampler<'a> {
    pub fn new(game: &'a XorGame, behaviour: &'a Behaviour) -> Result<Self> {
        if game.nu() != behaviour.nu() || game.nv() != behaviour.nv() {
            return Err(Error::Dimension(
                "sampler needs matching game and behaviour".into(),
            ));
        }
        let mut pairs = Vec::new();
        let mut cumulative = Vec::new();
        let mut acc = 0.0;
        for u in 0..game.nu() {
            for v in 0..game.nv() {
                let m = game.mu(u, v);
                if m > 0.0 {
                    acc += m;
                    pairs.push((u, v));
                    cumulative.push(acc);
                }
            }
        }
        Ok(RoundSampler {
            game,
            behaviour,
            pairs,
            cumulative,
        })
    }

    /// `(u, v, a, b)`, independent of the thermal bit.
    pub fn draw_transcript<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize, Bit, Bit) {
        let total = *self.cumulative.last().expect("mu has support");
        let t = rng.gen::<f64>() * total;
        let idx = self
            .cumulative
            .partition_point(|&c| c <= t)
            .min(self.pairs.len() - 1);
        let (u, v) = self.pairs[idx];
        let s = self.behaviour.slice(u, v);
        let y = rng.gen::<f64>();
        let (a, b) = if y < s[0][0] {
            (0, 0)
        } else if y < s[0][0] + s[0][1] {
            (0, 1)
        } else if y < s[0][0] + s[0][1] + s[1][0] {
            (1, 0)
        } else {
            (1, 1)
        };
        (u, v, a, b)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> RoundRecord {
        let x = u8::from(rng.gen::<bool>());
        let (u, v, a, b) = self.draw_transcript(rng);
        RoundRecord::assemble(self.game, x, u, v, a, b).expect("sampled indices are in range")
    }
}

pub const ROUND_CSV_HEADER: &str = "x,u,v,a,b,r,g,e,won";

pub fn write_rounds_csv<W: Write>(mut w: W, records: &[RoundRecord]) -> std::io::Result<()> {
    writeln!(w, "{ROUND_CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.x,
            r.u,
            r.v,
            r.a,
            r.b,
            r.r,
            r.g,
            r.e,
            u8::from(r.won)
        )?;
    }
    Ok(())
}
