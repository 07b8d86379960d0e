/// Hard caps for the exhaustive routines. All of them are exponential in
/// the capped quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    /// Vertices for canonical forms and isomorphism.
    pub canonical_vertices: usize,
    /// Vertices for the manageability checker.
    pub manageability_vertices: usize,
    /// Largest `beta(k, r)` accepted by the bounded-hypergraph enumerator.
    pub enumeration_beta: usize,
    /// Largest number of candidate edges the enumerator will range over.
    pub enumeration_edges: usize,
    /// Vertices for elimination-forest enumeration and `exact_fwidth`.
    pub forest_vertices: usize,
    /// Vertices for the separator-based decomposition oracle.
    pub td_oracle_vertices: usize,
    /// Universe size above which set quantifiers are not enumerated.
    pub mso_universe: usize,
    /// Universe size for exhaustive transduction runs.
    pub exhaustive_universe: usize,
    /// Colour count for exhaustive transduction runs.
    pub exhaustive_colours: usize,
    /// Branches an exhaustive transduction run may visit.
    pub exhaustive_branches: u64,
    /// Vertices for exact treewidth.
    pub treewidth_vertices: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            canonical_vertices: 8,
            manageability_vertices: 8,
            enumeration_beta: 6,
            enumeration_edges: 16,
            forest_vertices: 8,
            td_oracle_vertices: 6,
            mso_universe: 12,
            exhaustive_universe: 5,
            exhaustive_colours: 3,
            exhaustive_branches: 50_000_000,
            treewidth_vertices: 20,
        }
    }
}
