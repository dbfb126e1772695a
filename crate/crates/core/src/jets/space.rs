use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;

/// Monomial layout shared by every jet in `nvars` variables truncated at
/// total degree `max_order`.
///
/// Monomials are stored in graded order, so a jet of trunc order `k`
/// occupies exactly the prefix `0..count(k)` of the layout. Product and
/// derivative index tables are built once per space.
#[derive(Debug)]
pub struct JetSpace {
    nvars: usize,
    max_order: usize,
    exps: Vec<u8>,
    degrees: Vec<u8>,
    offsets: Vec<usize>,
    lookup: HashMap<Vec<u8>, u32>,
    // per monomial i: (j, i+j) for every j with deg i + deg j <= max_order, j ascending
    products: Vec<Vec<(u32, u32)>>,
    // per variable: (src, dst, exponent of the variable in src)
    partials: Vec<Vec<(u32, u32, u8)>>,
}

static SPACES: Lazy<Mutex<HashMap<(usize, usize), Arc<JetSpace>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

impl JetSpace {
    /// Returns the shared space for `nvars` variables at `max_order`.
    pub fn get(nvars: usize, max_order: usize) -> Arc<JetSpace> {
        let mut cache = SPACES.lock().expect("jet space cache poisoned");
        cache
            .entry((nvars, max_order))
            .or_insert_with(|| Arc::new(JetSpace::build(nvars, max_order)))
            .clone()
    }

    fn build(nvars: usize, max_order: usize) -> JetSpace {
        assert!(max_order < 255, "jet order too large");
        let mut exps = Vec::new();
        let mut degrees = Vec::new();
        let mut offsets = vec![0usize];
        let mut current = vec![0u8; nvars];
        for d in 0..=max_order {
            enumerate_degree(nvars, d, 0, &mut current, &mut |e| {
                exps.extend_from_slice(e);
                degrees.push(d as u8);
            });
            offsets.push(degrees.len());
        }
        let count = degrees.len();
        let mut lookup = HashMap::with_capacity(count);
        for i in 0..count {
            lookup.insert(exps[i * nvars..(i + 1) * nvars].to_vec(), i as u32);
        }

        let mut products = Vec::with_capacity(count);
        let mut sum = vec![0u8; nvars];
        for i in 0..count {
            let di = degrees[i] as usize;
            let limit = offsets[max_order - di + 1];
            let mut row = Vec::with_capacity(limit);
            for j in 0..limit {
                for v in 0..nvars {
                    sum[v] = exps[i * nvars + v] + exps[j * nvars + v];
                }
                row.push((j as u32, lookup[&sum]));
            }
            products.push(row);
        }

        let mut partials = vec![Vec::new(); nvars];
        let mut lowered = vec![0u8; nvars];
        for i in 0..count {
            let e = &exps[i * nvars..(i + 1) * nvars];
            for v in 0..nvars {
                if e[v] > 0 {
                    lowered.copy_from_slice(e);
                    lowered[v] -= 1;
                    partials[v].push((i as u32, lookup[&lowered], e[v]));
                }
            }
        }

        JetSpace {
            nvars,
            max_order,
            exps,
            degrees,
            offsets,
            lookup,
            products,
            partials,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Number of monomials of total degree at most `order` (zero for negative orders).
    pub fn count(&self, order: i32) -> usize {
        if order < 0 {
            0
        } else {
            self.offsets[(order as usize).min(self.max_order) + 1]
        }
    }

    pub fn exponents(&self, index: usize) -> &[u8] {
        &self.exps[index * self.nvars..(index + 1) * self.nvars]
    }

    pub fn degree(&self, index: usize) -> usize {
        self.degrees[index] as usize
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        self.lookup.get(exps).map(|&i| i as usize)
    }

    pub(crate) fn products(&self, index: usize) -> &[(u32, u32)] {
        &self.products[index]
    }

    pub(crate) fn partial_table(&self, var: usize) -> &[(u32, u32, u8)] {
        &self.partials[var]
    }
}

fn enumerate_degree(
    nvars: usize,
    remaining: usize,
    pos: usize,
    current: &mut Vec<u8>,
    emit: &mut dyn FnMut(&[u8]),
) {
    if pos + 1 == nvars {
        current[pos] = remaining as u8;
        emit(current);
        return;
    }
    if nvars == 0 {
        if remaining == 0 {
            emit(current);
        }
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e as u8;
        enumerate_degree(nvars, remaining - e, pos + 1, current, emit);
    }
    current[pos] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn monomial_counts() {
        for nvars in 1..5 {
            for order in 0..6 {
                let s = JetSpace::get(nvars, order);
                assert_eq!(s.count(order as i32), binomial(order + nvars, nvars));
                assert_eq!(s.count(-1), 0);
            }
        }
    }

    #[test]
    fn graded_layout() {
        let s = JetSpace::get(3, 4);
        for i in 1..s.count(4) {
            assert!(s.degree(i) >= s.degree(i - 1));
            let d: usize = s.exponents(i).iter().map(|&e| e as usize).sum();
            assert_eq!(d, s.degree(i));
            assert_eq!(s.index_of(s.exponents(i)), Some(i));
        }
    }

    #[test]
    fn shared_instances() {
        assert!(Arc::ptr_eq(&JetSpace::get(2, 3), &JetSpace::get(2, 3)));
    }
}
