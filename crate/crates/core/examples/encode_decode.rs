//! Encode Gaussian vectors with a two-sphere code, pack the indices and decode them.

use concentric_pc::codec::stream::{read_stream, write_stream};
use concentric_pc::codec::{decode, encode_cpc, ConcentricCode, InitialCodeword, Variant};
use concentric_pc::rng::GaussianStream;

fn main() -> concentric_pc::error::Result<()> {
    let code = ConcentricCode::new(vec![
        InitialCodeword::new("1,2,2".parse()?, vec![1.2, 0.5, 0.0], Variant::II)?,
        InitialCodeword::new("2,3".parse()?, vec![1.4, 0.6], Variant::II)?,
    ])?;
    for (j, m) in code.sizes().iter().enumerate() {
        println!("sphere {j}: {} codewords", m.value());
    }

    let xs = GaussianStream::new(3, "demo", code.n(), 5, 1.0).collect();
    let mut indices = Vec::new();
    for x in xs.chunks_exact(code.n()) {
        let (idx, word) = encode_cpc(x, &code)?;
        println!("{x:>+7.3?}\n  -> sphere {} rank {:>4} {word:?}", idx.sphere, idx.rank);
        indices.push(idx);
    }

    let bytes = write_stream(&code, &indices)?;
    println!("stream: {} bytes", bytes.len());
    for idx in read_stream(&code, &bytes)? {
        println!("{:?}", decode(&idx, &code)?);
    }
    Ok(())
}
