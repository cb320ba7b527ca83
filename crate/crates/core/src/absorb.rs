//! Exact absorption probabilities of finite Markov chains by sparse state
//! elimination over the rationals.

use std::collections::{HashMap, HashSet, VecDeque};

use num::{One, Zero};

use crate::Rat;

/// For each node, the probability of eventually being absorbed in each of
/// `targets`. `succ[i]` lists the outgoing distribution of node i; targets
/// and nodes with no successors never leave. Nodes that cannot reach a
/// target get all-zero rows.
pub fn absorption(succ: &[Vec<(usize, Rat)>], targets: &[usize]) -> Vec<Vec<Rat>> {
    let weights: Vec<(usize, Vec<Rat>)> = targets
        .iter()
        .enumerate()
        .map(|(c, &t)| {
            let mut w = vec![Rat::zero(); targets.len()];
            w[c] = Rat::one();
            (t, w)
        })
        .collect();
    expected_weights(succ, &weights, targets.len())
}

/// Expected weight vector collected on absorption, where each terminal node
/// carries a weight vector of the given width. Mass that is never absorbed
/// contributes nothing.
pub fn expected_weights(succ: &[Vec<(usize, Rat)>], terminals: &[(usize, Vec<Rat>)], width: usize) -> Vec<Vec<Rat>> {
    let n = succ.len();
    let targets: Vec<usize> = terminals.iter().map(|(t, _)| *t).collect();
    let column: HashMap<usize, usize> = targets.iter().enumerate().map(|(c, &t)| (t, c)).collect();

    // Backward reachability from the targets.
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, out) in succ.iter().enumerate() {
        if column.contains_key(&i) {
            continue;
        }
        for (j, _) in out {
            preds[*j].push(i);
        }
    }
    let mut live = vec![false; n];
    let mut queue: VecDeque<usize> = targets.iter().copied().collect();
    for &t in &targets {
        live[t] = true;
    }
    while let Some(j) = queue.pop_front() {
        for &i in &preds[j] {
            if !live[i] {
                live[i] = true;
                queue.push_back(i);
            }
        }
    }

    // x_i = Σ a_ij x_j + b_i over live non-target nodes.
    let mut rows: HashMap<usize, HashMap<usize, Rat>> = HashMap::new();
    let mut rhs: HashMap<usize, Vec<Rat>> = HashMap::new();
    let mut users: HashMap<usize, HashSet<usize>> = HashMap::new();
    let unknowns: Vec<usize> = (0..n).filter(|i| live[*i] && !column.contains_key(i)).collect();
    for &i in &unknowns {
        let mut row: HashMap<usize, Rat> = HashMap::new();
        let mut b = vec![Rat::zero(); width];
        for (j, p) in &succ[i] {
            if let Some(&c) = column.get(j) {
                for (dst, w) in b.iter_mut().zip(&terminals[c].1) {
                    *dst += p * w;
                }
            } else if live[*j] {
                *row.entry(*j).or_insert_with(Rat::zero) += p;
                users.entry(*j).or_default().insert(i);
            }
        }
        rows.insert(i, row);
        rhs.insert(i, b);
    }

    let mut order = Vec::with_capacity(unknowns.len());
    for &i in unknowns.iter().rev() {
        let mut row = rows.remove(&i).expect("row present");
        let mut b = rhs.remove(&i).expect("rhs present");
        if let Some(c) = row.remove(&i) {
            let scale = Rat::one() / (Rat::one() - c);
            for v in row.values_mut() {
                *v *= &scale;
            }
            for v in b.iter_mut() {
                *v *= &scale;
            }
        }
        if let Some(us) = users.remove(&i) {
            for k in us {
                if k == i {
                    continue;
                }
                let Some(krow) = rows.get_mut(&k) else { continue };
                let Some(coef) = krow.remove(&i) else { continue };
                for (j, a) in &row {
                    *krow.entry(*j).or_insert_with(Rat::zero) += &coef * a;
                    users.entry(*j).or_default().insert(k);
                }
                let kb = rhs.get_mut(&k).expect("rhs present");
                for (dst, src) in kb.iter_mut().zip(&b) {
                    *dst += &coef * src;
                }
            }
        }
        order.push((i, row, b));
    }

    let mut value: Vec<Vec<Rat>> = vec![vec![Rat::zero(); width]; n];
    for (t, w) in terminals {
        value[*t] = w.clone();
    }
    for (i, row, b) in order.into_iter().rev() {
        let mut x = b;
        for (j, a) in row {
            for (dst, src) in x.iter_mut().zip(&value[j]) {
                *dst += &a * src;
            }
        }
        value[i] = x;
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    #[test]
    fn geometric_retry_is_absorbed_surely() {
        // 0 -> 1 (1/2) or back to 0 (1/2); 1 is the target.
        let succ = vec![vec![(1, rat(1, 2)), (0, rat(1, 2))], vec![]];
        assert_eq!(absorption(&succ, &[1])[0], vec![rat(1, 1)]);
    }

    #[test]
    fn gamblers_ruin() {
        // States 0..=3, absorbing at 0 and 3, fair steps.
        let succ = vec![
            vec![],
            vec![(0, rat(1, 2)), (2, rat(1, 2))],
            vec![(1, rat(1, 2)), (3, rat(1, 2))],
            vec![],
        ];
        let v = absorption(&succ, &[0, 3]);
        assert_eq!(v[1], vec![rat(2, 3), rat(1, 3)]);
        assert_eq!(v[2], vec![rat(1, 3), rat(2, 3)]);
    }

    #[test]
    fn trapped_mass_is_not_absorbed() {
        // 0 -> trap 1 (self loop) or target 2.
        let succ = vec![vec![(1, rat(1, 3)), (2, rat(2, 3))], vec![(1, rat(1, 1))], vec![]];
        assert_eq!(absorption(&succ, &[2])[0], vec![rat(2, 3)]);
    }
}
