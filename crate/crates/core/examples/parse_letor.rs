//! Parse LETOR lines, build a normalized pool, draw slates and round-trip the
//! binary cache.
//!
//! ```bash
//! cargo run --example parse_letor -- [path/to/train.txt]
//! ```

use coagent_edge::letor::synthetic::{to_letor_text, SyntheticConfig};
use coagent_edge::letor::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> coagent_edge::Result<()> {
    let line = "2 qid:10 1:0.5 2:-0.25 #doc";
    let rec = parse_letor_line(line)?;
    println!("{line:?} -> relevance {}, query {}, features {:?}", rec.relevance, rec.query_id, rec.features);
    match parse_letor_line("1 qid:3 1:abc") {
        Err(e) => println!("malformed line: {e}"),
        Ok(_) => unreachable!(),
    }

    let records = match std::env::args().nth(1) {
        Some(path) => read_letor_file(path.as_ref())?,
        None => {
            let mut cfg = SyntheticConfig::for_dataset(Dataset::Mslr, 1);
            cfg.queries = 50;
            let recs = cfg.generate();
            println!("synthetic corpus, first line: {}", to_letor_text(&recs[..1]).trim_end().chars().take(60).collect::<String>());
            recs
        }
    };
    let pool = QueryPool::build(&records, Dataset::Mslr, SLATE_SIZE)?;
    println!("{} records -> {} queries, {} features", records.len(), pool.len(), pool.feature_dim());

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..3 {
        let qid = pool.sample_query(&mut rng)?.to_string();
        let slate = pool.select_candidates(&qid, &mut rng)?;
        println!("query {qid}: slate relevances {:?}", slate.relevances);
    }

    let mut bytes = Vec::new();
    write_pool_cache(&pool, &mut bytes)?;
    let back = read_pool_cache(bytes.as_slice())?;
    println!("cache v{CACHE_VERSION}: {} bytes, round trip equal: {}", bytes.len(), back == pool);
    Ok(())
}
