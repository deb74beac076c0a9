//! Loading a word embedding file and turning phrases into vectors.

use intentkb::embedding::{cosine, load_embeddings, phrase_vector, EmbeddingVocabulary};

fn main() -> intentkb::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus/embeddings.txt");
    let vocab = load_embeddings(path)?;
    println!("{} tokens of dimension {}", vocab.len(), vocab.dimension());

    for phrase in ["check in", "baggage allowance", "opening hours", "zagat"] {
        match phrase_vector(&vocab, phrase) {
            Some(v) => println!("{phrase:>18}: {:?}, {} term(s) covered", v.source, v.covered_terms),
            None => println!("{phrase:>18}: out of vocabulary"),
        }
    }

    let sim = |a: &str, b: &str| -> intentkb::Result<f64> {
        let (Some(u), Some(v)) = (phrase_vector(&vocab, a), phrase_vector(&vocab, b)) else {
            return Ok(f64::NAN);
        };
        cosine(&u.vector, &v.vector)
    };
    println!("cos(weather, forecast) = {:.4}", sim("weather", "forecast")?);
    println!("cos(weather, menu)     = {:.4}", sim("weather", "menu")?);

    let toy = EmbeddingVocabulary::from_entries(2, [("aaa", vec![1.0, 0.0]), ("bbb", vec![0.0, 1.0])])?;
    let v = phrase_vector(&toy, "aaa bbb").expect("both terms known");
    println!("phrase 'aaa bbb' -> {:?}", v.vector);
    Ok(())
}
