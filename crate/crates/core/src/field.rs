//! Arithmetic in GF(p^m), used by the prime-power MUB constructions.
//!
//! Elements are encoded as integers `0..p^m` whose base-`p` digits are the
//! polynomial coefficients (lowest degree first). Addition, multiplication
//! and trace are tabulated once at construction.

use crate::error::{Error, Result};

pub(crate) const MAX_ORDER: usize = 256;

#[derive(Clone, Debug)]
pub(crate) struct GaloisField {
    p: usize,
    m: usize,
    q: usize,
    add: Vec<usize>,
    mul: Vec<usize>,
    trace: Vec<usize>,
}

/// `Some((p, m))` when `n = p^m` for a prime `p`.
pub(crate) fn prime_power(n: usize) -> Option<(usize, usize)> {
    if n < 2 {
        return None;
    }
    let p = (2..=n).find(|k| n.is_multiple_of(*k))?;
    let mut rest = n;
    let mut m = 0;
    while rest.is_multiple_of(p) {
        rest /= p;
        m += 1;
    }
    (rest == 1).then_some((p, m))
}

fn poly_rem(mut a: Vec<usize>, b: &[usize], p: usize) -> Vec<usize> {
    // b is monic.
    let db = b.len() - 1;
    while a.len() > db {
        let lead = *a.last().unwrap();
        let shift = a.len() - 1 - db;
        if lead != 0 {
            for (i, &c) in b.iter().enumerate() {
                let idx = shift + i;
                a[idx] = (a[idx] + p * p - (lead * c) % p) % p;
            }
        }
        a.pop();
    }
    a
}

fn monic(coeffs_code: usize, degree: usize, p: usize) -> Vec<usize> {
    let mut c = Vec::with_capacity(degree + 1);
    let mut code = coeffs_code;
    for _ in 0..degree {
        c.push(code % p);
        code /= p;
    }
    c.push(1);
    c
}

fn is_irreducible(f: &[usize], p: usize) -> bool {
    let deg = f.len() - 1;
    for k in 1..=deg / 2 {
        for code in 0..p.pow(k as u32) {
            let g = monic(code, k, p);
            if poly_rem(f.to_vec(), &g, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

impl GaloisField {
    pub(crate) fn new(q: usize) -> Result<Self> {
        let (p, m) = prime_power(q).ok_or_else(|| Error::Capability(format!("{q} is not a prime power")))?;
        if q > MAX_ORDER {
            return Err(Error::Capability(format!(
                "field order {q} exceeds the supported maximum {MAX_ORDER}"
            )));
        }
        let modulus = (0..q)
            .map(|code| monic(code, m, p))
            .find(|f| is_irreducible(f, p))
            .expect("an irreducible polynomial of every degree exists");

        let digits = |x: usize| -> Vec<usize> {
            let mut v = Vec::with_capacity(m);
            let mut r = x;
            for _ in 0..m {
                v.push(r % p);
                r /= p;
            }
            v
        };
        let encode = |v: &[usize]| -> usize { v.iter().rev().fold(0, |acc, &c| acc * p + c) };

        let mut add = vec![0; q * q];
        let mut mul = vec![0; q * q];
        for a in 0..q {
            let da = digits(a);
            for b in 0..q {
                let db = digits(b);
                let sum: Vec<usize> = da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect();
                add[a * q + b] = encode(&sum);
                let mut prod = vec![0; 2 * m - 1];
                for (i, x) in da.iter().enumerate() {
                    for (j, y) in db.iter().enumerate() {
                        prod[i + j] = (prod[i + j] + x * y) % p;
                    }
                }
                let mut rem = poly_rem(prod, &modulus, p);
                rem.resize(m, 0);
                mul[a * q + b] = encode(&rem);
            }
        }
        let mut field = GaloisField {
            p,
            m,
            q,
            add,
            mul,
            trace: vec![0; q],
        };
        for z in 0..q {
            // Tr(z) = z + z^p + ... + z^(p^(m-1)) lands in the prime subfield.
            let mut power = z;
            let mut acc = 0;
            for _ in 0..m {
                acc = field.add(acc, power);
                power = field.pow(power, p);
            }
            debug_assert!(acc < p, "trace must lie in the prime field");
            field.trace[z] = acc;
        }
        Ok(field)
    }

    pub(crate) fn order(&self) -> usize {
        self.q
    }

    pub(crate) fn characteristic(&self) -> usize {
        self.p
    }

    pub(crate) fn degree(&self) -> usize {
        self.m
    }

    pub(crate) fn add(&self, a: usize, b: usize) -> usize {
        self.add[a * self.q + b]
    }

    pub(crate) fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.q + b]
    }

    pub(crate) fn pow(&self, a: usize, e: usize) -> usize {
        (0..e).fold(1, |acc, _| self.mul(acc, a))
    }

    pub(crate) fn trace(&self, a: usize) -> usize {
        self.trace[a]
    }

    /// The element `x^k`, a basis of the field over its prime subfield.
    pub(crate) fn monomial(&self, k: usize) -> usize {
        self.p.pow(k as u32)
    }
}
