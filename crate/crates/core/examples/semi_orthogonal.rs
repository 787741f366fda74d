//! Repeated projection of a random factor towards `M Mᵀ = c I`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use senan::numerics::{orthogonality_error, semi_orthogonal_step, OrthoScale, Tensor};

fn main() -> senan::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for r in [2usize, 8, 16] {
        let c = 4 * r;
        let data = (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut m = Tensor::matrix(r, c, data)?;
        print!("{r:>2}x{c:<3}");
        for step in 0..=12 {
            if step % 3 == 0 {
                print!("  step {step:>2}: {:.2e}", orthogonality_error(&m, OrthoScale::Floating)?);
            }
            m = semi_orthogonal_step(&m, OrthoScale::Floating)?;
        }
        println!();
    }
    Ok(())
}
