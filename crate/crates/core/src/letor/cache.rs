//! Versioned binary cache of a normalized [`QueryPool`].
//!
//! Layout (little-endian):
//!
//! ```text
//! magic "CEQPOOL\0" | version u32 | dataset u8 | feature_dim u64
//! feature_dim x (min f64, max f64)
//! query_count u64
//! per query: id_len u64, id bytes, doc_count u64,
//!            per doc: relevance u8, feature_dim x f64
//! ```

use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{Dataset, PoolDocument, QueryPool};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"CEQPOOL\0";
pub const CACHE_VERSION: u32 = 1;

pub fn write_pool_cache<W: Write>(pool: &QueryPool, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    w.write_all(&[match pool.dataset() {
        Dataset::Mslr => 0u8,
        Dataset::Mq2008 => 1u8,
    }])?;
    w.write_all(&(pool.feature_dim() as u64).to_le_bytes())?;
    for &(lo, hi) in pool.feature_bounds() {
        w.write_all(&lo.to_le_bytes())?;
        w.write_all(&hi.to_le_bytes())?;
    }
    w.write_all(&(pool.len() as u64).to_le_bytes())?;
    for (id, docs) in pool.queries() {
        w.write_all(&(id.len() as u64).to_le_bytes())?;
        w.write_all(id.as_bytes())?;
        w.write_all(&(docs.len() as u64).to_le_bytes())?;
        for d in docs {
            w.write_all(&[d.relevance])?;
            for v in d.features.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_pool_cache<R: Read>(mut r: R) -> Result<QueryPool> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a query pool cache".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != CACHE_VERSION {
        return Err(Error::Format(format!(
            "cache version {version}, expected {CACHE_VERSION}"
        )));
    }
    let dataset = match read_array::<1, _>(&mut r)?[0] {
        0 => Dataset::Mslr,
        1 => Dataset::Mq2008,
        tag => return Err(Error::Format(format!("unknown dataset tag {tag}"))),
    };
    let dim = read_len(&mut r)?;
    let mut bounds = Vec::with_capacity(dim.min(1 << 16));
    for _ in 0..dim {
        bounds.push((read_f64(&mut r)?, read_f64(&mut r)?));
    }
    let n_queries = read_len(&mut r)?;
    let mut queries = BTreeMap::new();
    for _ in 0..n_queries {
        let id_len = read_len(&mut r)?;
        let mut id = vec![0u8; id_len];
        r.read_exact(&mut id)?;
        let id = String::from_utf8(id).map_err(|_| Error::Format("query id is not utf-8".into()))?;
        let n_docs = read_len(&mut r)?;
        let mut docs = Vec::with_capacity(n_docs.min(1 << 16));
        for _ in 0..n_docs {
            let relevance = read_array::<1, _>(&mut r)?[0];
            let features = (0..dim)
                .map(|_| read_f64(&mut r))
                .collect::<Result<Vec<f64>>>()?;
            docs.push(PoolDocument {
                relevance,
                features: features.into(),
            });
        }
        queries.insert(id, docs);
    }
    Ok(QueryPool::from_parts(dataset, dim, bounds, queries))
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_le_bytes(read_array(r)?))
}

fn read_len<R: Read>(r: &mut R) -> Result<usize> {
    usize::try_from(u64::from_le_bytes(read_array(r)?))
        .map_err(|_| Error::Format("length does not fit in usize".into()))
}
