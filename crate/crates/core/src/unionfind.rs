//! Disjoint-set forest where the smallest index of a set is its root.

#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        assert!(n <= u32::MAX as usize, "union-find limited to u32 indices");
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Root of `x`, with path halving.
    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }

    /// Merges the sets of `a` and `b`; the smaller root wins. Returns `true`
    /// if the sets were distinct.
    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return false;
        }
        let (min, max) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[max as usize] = min;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_index_is_root() {
        let mut uf = UnionFind::new(6);
        uf.union(5, 3);
        uf.union(3, 4);
        uf.union(4, 1);
        for x in [1, 3, 4, 5] {
            assert_eq!(uf.find(x), 1);
        }
        assert_eq!(uf.find(0), 0);
        assert!(!uf.union(5, 1));
    }
}
