//! The algebraic laws of separating multiplication and the guarded wand,
//! checked pointwise over a bounded universe.

use num::Zero;

use super::{Evaluator, Expectation};
use crate::error::Result;
use crate::state::{DomainBounds, ProgState};
use crate::{rat, Rat};

/// Expectations to instantiate the laws with. `phi` and `psi` must be
/// qualitative; the precise-only laws are checked when `precise` is precise.
#[derive(Clone, Debug)]
pub struct LawInputs {
    pub x: Expectation,
    pub y: Expectation,
    pub z: Expectation,
    pub phi: Expectation,
    pub psi: Expectation,
    pub precise: Expectation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub law: &'static str,
    pub state: Option<ProgState>,
    pub lhs: Rat,
    pub rhs: Rat,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LawReport {
    pub violations: Vec<Violation>,
    /// Per sum law, the number of states where the sum side exceeds 1 and
    /// the instance is not one-bounded; those states are not checked.
    pub skipped: Vec<(&'static str, usize)>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Rel {
    Eq,
    Le,
}

fn sep(a: &Expectation, b: &Expectation) -> Expectation {
    Expectation::sep(a.clone(), b.clone())
}

fn wand(g: &Expectation, b: &Expectation) -> Expectation {
    Expectation::wand(g.clone(), b.clone())
}

fn half(a: &Expectation) -> Expectation {
    Expectation::scale(rat(1, 2), a.clone())
}

/// All law instances that fail at some state, in catalogue order.
pub fn check_laws(inp: &LawInputs, bounds: &DomainBounds) -> Result<LawReport> {
    let ev = Evaluator::new(bounds);
    let LawInputs { x, y, z, phi, psi, precise } = inp;
    let mut vars = x.free_vars();
    for e in [y, z, phi, psi, precise] {
        vars.extend(e.free_vars());
    }
    let states = ev.states(&vars);
    let precise_ok = super::is_precise(precise, bounds)?;
    let mut out = Vec::new();
    let mut skipped = Vec::new();

    // Laws stated as lhs REL rhs with both sides expectations.
    let mut pointwise: Vec<(&'static str, Expectation, Rel, Expectation)> = vec![
        ("sep-assoc", sep(&sep(x, y), z), Rel::Eq, sep(x, &sep(y, z))),
        ("sep-comm", sep(x, y), Rel::Eq, sep(y, x)),
        ("sep-neutral", sep(&Expectation::emp(), x), Rel::Eq, x.clone()),
        ("sep-monotone-left", sep(x, y), Rel::Le, sep(&Expectation::max(x.clone(), z.clone()), y)),
        ("sep-monotone-right", sep(x, y), Rel::Le, sep(x, &Expectation::max(y.clone(), z.clone()))),
        (
            "sep-max",
            sep(x, &Expectation::max(y.clone(), z.clone())),
            Rel::Eq,
            Expectation::max(sep(x, y), sep(x, z)),
        ),
        (
            "sep-mul-qualitative",
            sep(phi, &Expectation::mul(y.clone(), z.clone())),
            Rel::Le,
            Expectation::mul(sep(phi, y), sep(phi, z)),
        ),
        ("wand-modus-ponens", sep(phi, &wand(phi, x)), Rel::Le, x.clone()),
        ("wand-unit", x.clone(), Rel::Le, wand(phi, &sep(phi, x))),
        (
            "wand-min",
            wand(phi, &Expectation::min(x.clone(), y.clone())),
            Rel::Eq,
            Expectation::min(wand(phi, x), wand(phi, y)),
        ),
        (
            "wand-mul",
            Expectation::mul(wand(phi, x), wand(phi, y)),
            Rel::Le,
            wand(phi, &Expectation::mul(x.clone(), y.clone())),
        ),
        (
            "wand-max",
            Expectation::max(wand(phi, x), wand(phi, y)),
            Rel::Le,
            wand(phi, &Expectation::max(x.clone(), y.clone())),
        ),
        ("wand-combine", wand(phi, &wand(psi, x)), Rel::Eq, wand(&sep(phi, psi), x)),
        ("wand-sep", sep(&wand(phi, x), y), Rel::Le, wand(phi, &sep(x, y))),
    ];
    if precise_ok {
        pointwise.push((
            "precise-sep-min",
            sep(precise, &Expectation::min(x.clone(), y.clone())),
            Rel::Eq,
            Expectation::min(sep(precise, x), sep(precise, y)),
        ));
    }
    let phi_precise = super::is_precise(phi, bounds)?;
    if phi_precise {
        pointwise.push((
            "precise-qualitative-sep-mul",
            sep(phi, &Expectation::mul(x.clone(), y.clone())),
            Rel::Eq,
            Expectation::mul(sep(phi, x), sep(phi, y)),
        ));
    }

    // Laws with a sum on one side, computed numerically so that no sum node
    // above 1 is ever built.
    let halves = Expectation::add(half(y), half(z));
    let mut summed: Vec<(&'static str, Expectation, Rel, [Expectation; 2], bool)> = vec![
        ("sep-add", sep(x, &halves), Rel::Le, [sep(x, &half(y)), sep(x, &half(z))], false),
        ("wand-add", wand(phi, &halves), Rel::Le, [wand(phi, &half(y)), wand(phi, &half(z))], true),
    ];
    if precise_ok {
        summed.push((
            "precise-sep-add",
            sep(precise, &halves),
            Rel::Eq,
            [sep(precise, &half(y)), sep(precise, &half(z))],
            false,
        ));
    }

    let zero = Rat::zero();
    let one = Rat::from_integer(1.into());
    let mut sums: Vec<Vec<(Rat, Rat)>> = vec![Vec::new(); summed.len()];
    for st in &states {
        for e in [x, y, z, phi, psi] {
            let v = ev.eval_state(e, st)?;
            if v < zero || v > one {
                out.push(Violation { law: "bounded", state: Some(st.clone()), lhs: v, rhs: one.clone() });
            }
        }
        for (law, lhs, rel, rhs) in &pointwise {
            let (a, b) = (ev.eval_state(lhs, st)?, ev.eval_state(rhs, st)?);
            if !holds(*rel, &a, &b) {
                out.push(Violation { law, state: Some(st.clone()), lhs: a, rhs: b });
            }
        }
        for (k, (_, single, _, [p, q], _)) in summed.iter().enumerate() {
            let a = ev.eval_state(single, st)?;
            let b = ev.eval_state(p, st)? + ev.eval_state(q, st)?;
            sums[k].push((a, b));
        }
    }
    for (k, (law, _, rel, _, reversed)) in summed.iter().enumerate() {
        let out_of_range = sums[k].iter().filter(|(_, b)| *b > one).count();
        if out_of_range > 0 {
            skipped.push((*law, out_of_range));
        }
        for (st, (a, b)) in states.iter().zip(&sums[k]) {
            if *b > one {
                continue;
            }
            let (lhs, rhs) = if *reversed { (b, a) } else { (a, b) };
            if !holds(*rel, lhs, rhs) {
                out.push(Violation { law, state: Some(st.clone()), lhs: lhs.clone(), rhs: rhs.clone() });
            }
        }
    }

    // Adjointness is a statement about whole entailments.
    let mut left = true;
    let mut right = true;
    let x_phi = sep(x, phi);
    let phi_y = wand(phi, y);
    for st in &states {
        if ev.eval_state(&x_phi, st)? > ev.eval_state(y, st)? {
            left = false;
        }
        if ev.eval_state(x, st)? > ev.eval_state(&phi_y, st)? {
            right = false;
        }
    }
    if left != right {
        out.push(Violation {
            law: "wand-adjoint",
            state: None,
            lhs: Rat::from_integer(i64::from(left).into()),
            rhs: Rat::from_integer(i64::from(right).into()),
        });
    }
    Ok(LawReport { violations: out, skipped })
}

fn holds(rel: Rel, a: &Rat, b: &Rat) -> bool {
    match rel {
        Rel::Eq => a == b,
        Rel::Le => a <= b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expectation::parse_expectation;

    #[test]
    fn laws_hold_on_a_hand_picked_instance() {
        let b = DomainBounds::new(["a".into(), "b".into()], (-1, 1), [0, 1], 2).unwrap();
        let e = |s: &str| parse_expectation(s).unwrap();
        let inp = LawInputs {
            x: e("max([a |-> 0], 1/2 * [emp])"),
            y: e("[b |-> -] ** 1/3"),
            z: e("[a = b] * 3/4"),
            phi: e("[a |-> 1]"),
            psi: e("[b |-> -]"),
            precise: e("max([a |-> 0], [a |-> 1])"),
        };
        let report = check_laws(&inp, &b).unwrap();
        assert_eq!(report.violations, vec![]);
        assert!(report.skipped.iter().all(|(law, _)| *law == "wand-add"));
    }
}
