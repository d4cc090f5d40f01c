use crate::error::Result;

/// Anything that evaluates a multilinear map on one lifted vector per feature.
///
/// The attribution engine and the enumeration oracle only need this
/// interface, so tensor networks and CP teachers are interchangeable.
pub trait MultilinearMap: Sync {
    /// Physical extent `d_i` of every feature leg.
    fn phys_dims(&self) -> &[usize];

    fn n(&self) -> usize {
        self.phys_dims().len()
    }

    /// One full contraction. Counts as one forward pass.
    fn forward(&self, inputs: &[Vec<f64>]) -> Result<f64>;

    /// Vectors `e_i` such that replacing leg `i` of `inputs` by `v` gives
    /// `⟨e_i, v⟩`. Implementations may share work across legs; this is not
    /// counted as a forward pass.
    fn leg_environments(&self, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>>;

    /// Forward passes performed so far.
    fn forward_count(&self) -> u64;
}
