use super::{AcceptanceStats, Domain, Method, SolveResult};
use crate::error::{Error, Result};
use crate::ising::IsingProblem;

pub const MAX_BRUTE_FORCE_SPINS: usize = 25;

/// Exact energies are recomputed from scratch this often to bound drift.
const RESYNC_INTERVAL: u32 = 1 << 12;

/// Spin `i` is `+1` iff bit `n - 1 - i` of `code` is set, so numeric order on
/// codes is lexicographic order on states with `-1 < +1`.
fn decode(code: u32, n: usize) -> Vec<i8> {
    (0..n)
        .map(|i| if code >> (n - 1 - i) & 1 == 1 { 1 } else { -1 })
        .collect()
}

/// Exhaustive search over all `2^n` states in Gray-code order. Ties go to the
/// lexicographically smallest state.
pub fn brute_force(p: &IsingProblem) -> Result<SolveResult> {
    let n = p.n();
    if n > MAX_BRUTE_FORCE_SPINS {
        return Err(Error::TooManySpins {
            n,
            max: MAX_BRUTE_FORCE_SPINS,
        });
    }
    let adj = p.adjacency();
    let scale = 1.0 + p.fields().iter().map(|v| v.abs()).sum::<f64>()
        + p.couplings().map(|(_, v)| v.abs()).sum::<f64>();
    let tol = 1e-12 * scale;

    let mut s = vec![-1i8; n];
    let mut field: Vec<f64> = (0..n).map(|i| p.local_field(&adj, &s, i)).collect();
    let mut energy = p.energy(&s);
    let mut best_code = 0u32;
    let mut best_energy = energy;
    let mut proposed = 0u64;

    let total: u64 = 1u64 << n;
    for k in 1..total {
        let k = k as u32;
        let bit = k.trailing_zeros() as usize;
        let i = n - 1 - bit;
        // flipping s_i changes the energy by -2 s_i f_i
        energy -= 2.0 * f64::from(s[i]) * field[i];
        s[i] = -s[i];
        let si = f64::from(s[i]);
        for &(j, v) in &adj[i] {
            field[j] += 2.0 * v * si;
        }
        proposed += 1;
        if k.is_multiple_of(RESYNC_INTERVAL) {
            energy = p.energy(&s);
            for (j, f) in field.iter_mut().enumerate() {
                *f = p.local_field(&adj, &s, j);
            }
        }
        let code = k ^ (k >> 1);
        if energy < best_energy - tol {
            best_code = code;
            best_energy = energy;
        } else if energy <= best_energy + tol {
            let exact = p.energy(&s);
            let exact_best = p.energy(&decode(best_code, n));
            if exact < exact_best || (exact == exact_best && code < best_code) {
                best_code = code;
                best_energy = exact;
            }
        }
    }

    let state = decode(best_code, n);
    let best_energy = p.energy(&state);
    Ok(SolveResult {
        method: Method::Exact,
        seed: 0,
        n,
        domain: Domain::Spin,
        best_energy,
        best_state: state,
        restart_energies: vec![best_energy],
        acceptance: AcceptanceStats {
            proposed,
            accepted: proposed,
        },
        params: serde_json::json!({}),
        trace: Vec::new(),
    })
}
