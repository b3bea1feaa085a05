use std::ops::Deref;

use super::LtlFormula;

/// A formula in negation normal form: `Not` only directly above atoms, and no
/// `Eventually`/`Always` nodes (they are rewritten into `Until`/`Release`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NnfFormula(LtlFormula);

impl NnfFormula {
    pub fn into_inner(self) -> LtlFormula {
        self.0
    }
}

impl Deref for NnfFormula {
    type Target = LtlFormula;

    fn deref(&self) -> &LtlFormula {
        &self.0
    }
}

pub fn is_nnf(f: &LtlFormula) -> bool {
    use LtlFormula::*;
    match f {
        True | False | Atom(_) => true,
        Not(g) => matches!(**g, Atom(_)),
        Eventually(_) | Always(_) => false,
        And(a, b) | Or(a, b) | Until(a, b) | Release(a, b) => is_nnf(a) && is_nnf(b),
        Next(g) => is_nnf(g),
    }
}

pub fn to_nnf(f: &LtlFormula) -> NnfFormula {
    NnfFormula(positive(f))
}

fn positive(f: &LtlFormula) -> LtlFormula {
    use LtlFormula::*;
    match f {
        True | False | Atom(_) => f.clone(),
        Not(g) => negative(g),
        And(a, b) => LtlFormula::and(positive(a), positive(b)),
        Or(a, b) => LtlFormula::or(positive(a), positive(b)),
        Next(g) => LtlFormula::next(positive(g)),
        Until(a, b) => LtlFormula::until(positive(a), positive(b)),
        Release(a, b) => LtlFormula::release(positive(a), positive(b)),
        Eventually(g) => LtlFormula::until(True, positive(g)),
        Always(g) => LtlFormula::release(False, positive(g)),
    }
}

// NNF of the negation of `f`.
fn negative(f: &LtlFormula) -> LtlFormula {
    use LtlFormula::*;
    match f {
        True => False,
        False => True,
        Atom(_) => LtlFormula::not(f.clone()),
        Not(g) => positive(g),
        And(a, b) => LtlFormula::or(negative(a), negative(b)),
        Or(a, b) => LtlFormula::and(negative(a), negative(b)),
        Next(g) => LtlFormula::next(negative(g)),
        Until(a, b) => LtlFormula::release(negative(a), negative(b)),
        Release(a, b) => LtlFormula::until(negative(a), negative(b)),
        Eventually(g) => LtlFormula::release(False, negative(g)),
        Always(g) => LtlFormula::until(True, negative(g)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use LtlFormula as L;

    fn p() -> LtlFormula {
        L::atom("p")
    }

    fn q() -> LtlFormula {
        L::atom("q")
    }

    #[test]
    fn double_negation() {
        assert_eq!(to_nnf(&L::not(L::not(p()))).into_inner(), p());
    }

    #[test]
    fn until_release_duality() {
        assert_eq!(
            to_nnf(&L::not(L::until(p(), q()))).into_inner(),
            L::release(L::not(p()), L::not(q()))
        );
        assert_eq!(
            to_nnf(&L::not(L::release(p(), q()))).into_inner(),
            L::until(L::not(p()), L::not(q()))
        );
    }

    #[test]
    fn eventually_always_duality() {
        assert_eq!(
            to_nnf(&L::not(L::eventually(p()))).into_inner(),
            L::release(L::False, L::not(p()))
        );
        assert_eq!(to_nnf(&L::eventually(p())).into_inner(), L::until(L::True, p()));
        assert_eq!(
            to_nnf(&L::not(L::always(p()))).into_inner(),
            L::until(L::True, L::not(p()))
        );
    }

    #[test]
    fn de_morgan_and_next() {
        assert_eq!(
            to_nnf(&L::not(L::and(p(), L::next(q())))).into_inner(),
            L::or(L::not(p()), L::next(L::not(q())))
        );
        assert_eq!(to_nnf(&L::not(L::True)).into_inner(), L::False);
    }

    #[test]
    fn shape_check() {
        assert!(is_nnf(&L::release(L::False, L::not(p()))));
        assert!(!is_nnf(&L::always(p())));
        assert!(!is_nnf(&L::not(L::not(p()))));
    }
}
