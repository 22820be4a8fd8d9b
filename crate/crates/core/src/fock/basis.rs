use crate::error::{Error, Result};

const NONE: u32 = u32::MAX;

/// Binomial coefficient, saturating at `usize::MAX`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// Number of occupation vectors over `modes` modes with total `n`.
pub fn sector_dim(modes: usize, n: usize) -> usize {
    binomial(n + modes - 1, modes - 1)
}

/// Ranking of occupation vectors with a fixed total, in reverse
/// lexicographic order: `(n, 0, .., 0)` has rank 0 and `(0, .., 0, n)` is last.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SectorIndex {
    pub modes: usize,
    pub total: usize,
}

impl SectorIndex {
    pub fn new(modes: usize, total: usize) -> Self {
        Self { modes, total }
    }

    pub fn dim(&self) -> usize {
        sector_dim(self.modes, self.total)
    }

    /// O(M) rank via the hockey-stick identity.
    pub fn rank(&self, occ: &[u16]) -> usize {
        debug_assert_eq!(occ.len(), self.modes);
        let mut rank = 0;
        let mut rem = self.total;
        for (i, &n) in occ.iter().enumerate().take(self.modes - 1) {
            let n = n as usize;
            let k = self.modes - i - 1;
            if n < rem {
                rank += binomial(rem - n - 1 + k, k);
            }
            rem -= n;
        }
        rank
    }

    /// Inverse of [`rank`](Self::rank).
    pub fn unrank(&self, mut rank: usize) -> Vec<u16> {
        let mut occ = vec![0u16; self.modes];
        let mut rem = self.total;
        for (i, slot) in occ.iter_mut().enumerate().take(self.modes - 1) {
            let k = self.modes - i - 1;
            // walk the first component down from `rem`
            let mut v = rem;
            loop {
                let block = sector_dim(k, rem - v);
                if rank < block {
                    break;
                }
                rank -= block;
                v -= 1;
            }
            *slot = v as u16;
            rem -= v;
        }
        occ[self.modes - 1] = rem as u16;
        occ
    }

    /// All vectors in rank order.
    pub fn enumerate(&self) -> Vec<Vec<u16>> {
        let mut out = Vec::with_capacity(self.dim());
        let mut cur = vec![0u16; self.modes];
        fill(&mut out, &mut cur, 0, self.total);
        out
    }
}

fn fill(out: &mut Vec<Vec<u16>>, cur: &mut Vec<u16>, i: usize, rem: usize) {
    if i == cur.len() - 1 {
        cur[i] = rem as u16;
        out.push(cur.clone());
        return;
    }
    for v in (0..=rem).rev() {
        cur[i] = v as u16;
        fill(out, cur, i + 1, rem - v);
    }
}

/// Truncated Fock basis: every occupation vector over `modes` modes with
/// total at most `n_max`, ordered by sector and then by [`SectorIndex`] rank.
#[derive(Debug)]
pub struct FockBasis {
    modes: usize,
    n_max: usize,
    offsets: Vec<usize>,
    occ: Vec<u16>,
    sector: Vec<u16>,
    raise: Vec<u32>,
    lower: Vec<u32>,
}

impl PartialEq for FockBasis {
    fn eq(&self, other: &Self) -> bool {
        self.modes == other.modes && self.n_max == other.n_max
    }
}

impl FockBasis {
    pub fn new(modes: usize, n_max: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidParameter("Fock basis needs at least one mode".into()));
        }
        let dim = binomial(modes + n_max, modes);
        if dim >= NONE as usize {
            return Err(Error::InvalidParameter(format!("Fock dimension {dim} too large")));
        }
        let mut offsets = Vec::with_capacity(n_max + 2);
        let mut occ = Vec::with_capacity(dim * modes);
        let mut sector = Vec::with_capacity(dim);
        let mut acc = 0;
        for n in 0..=n_max {
            offsets.push(acc);
            for v in SectorIndex::new(modes, n).enumerate() {
                occ.extend_from_slice(&v);
                sector.push(n as u16);
            }
            acc += sector_dim(modes, n);
        }
        offsets.push(acc);
        debug_assert_eq!(acc, dim);

        let mut basis = Self { modes, n_max, offsets, occ, sector, raise: vec![NONE; dim * modes], lower: vec![NONE; dim * modes] };
        let mut scratch = vec![0u16; modes];
        for k in 0..dim {
            let n = basis.sector[k] as usize;
            scratch.copy_from_slice(basis.occupation(k));
            for i in 0..modes {
                if n < n_max {
                    scratch[i] += 1;
                    basis.raise[k * modes + i] = basis.index_in_sector(n + 1, &scratch) as u32;
                    scratch[i] -= 1;
                }
                if scratch[i] > 0 {
                    scratch[i] -= 1;
                    basis.lower[k * modes + i] = basis.index_in_sector(n - 1, &scratch) as u32;
                    scratch[i] += 1;
                }
            }
        }
        Ok(basis)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.sector.len()
    }

    pub fn describe(&self) -> String {
        format!("FockBasis(M={}, n_max={})", self.modes, self.n_max)
    }

    pub fn occupation(&self, k: usize) -> &[u16] {
        &self.occ[k * self.modes..(k + 1) * self.modes]
    }

    pub fn sector_of(&self, k: usize) -> usize {
        self.sector[k] as usize
    }

    /// Index range of sector `n`.
    pub fn sector_range(&self, n: usize) -> std::ops::Range<usize> {
        self.offsets[n]..self.offsets[n + 1]
    }

    fn index_in_sector(&self, n: usize, occ: &[u16]) -> usize {
        self.offsets[n] + SectorIndex::new(self.modes, n).rank(occ)
    }

    /// Index of an occupation vector, or `None` if it is outside the truncation.
    pub fn index_of(&self, occ: &[u16]) -> Option<usize> {
        if occ.len() != self.modes {
            return None;
        }
        let n: usize = occ.iter().map(|&x| x as usize).sum();
        (n <= self.n_max).then(|| self.index_in_sector(n, occ))
    }

    /// Index reached by `a*_i`, `None` when it leaves the truncation.
    #[inline]
    pub fn raised(&self, k: usize, i: usize) -> Option<usize> {
        let r = self.raise[k * self.modes + i];
        (r != NONE).then_some(r as usize)
    }

    /// Index reached by `a_i`, `None` when mode `i` is empty.
    #[inline]
    pub fn lowered(&self, k: usize, i: usize) -> Option<usize> {
        let r = self.lower[k * self.modes + i];
        (r != NONE).then_some(r as usize)
    }
}
