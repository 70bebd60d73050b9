//! Level-ordered tree CSV: `level,address,<atom ids>`, where `address` spells
//! the signs leading to the node as `+`/`-` (empty for the root).

use std::io::{Read, Write};

use super::{MartingaleError, PaleyWalshMartingale};

fn address(k: usize, node: usize) -> String {
    (0..k)
        .map(|j| {
            if node >> (k - 1 - j) & 1 == 1 {
                '+'
            } else {
                '-'
            }
        })
        .collect()
}

fn parse_address(s: &str) -> Option<usize> {
    s.chars().try_fold(0usize, |acc, c| match c {
        '+' => Some(2 * acc + 1),
        '-' => Some(2 * acc),
        _ => None,
    })
}

pub fn write_tree_csv<W: Write>(
    writer: W,
    tree: &PaleyWalshMartingale,
    atom_ids: &[String],
) -> Result<(), MartingaleError> {
    if atom_ids.len() != tree.atoms() {
        return Err(MartingaleError::LengthMismatch {
            expected: tree.atoms(),
            found: atom_ids.len(),
        });
    }
    let err = |e: csv::Error| MartingaleError::Csv(e.to_string());
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["level".to_owned(), "address".to_owned()];
    header.extend(atom_ids.iter().cloned());
    w.write_record(&header).map_err(err)?;
    for k in 0..=tree.depth() {
        for i in 0..1usize << k {
            let mut row = vec![k.to_string(), address(k, i)];
            row.extend(tree.value(k, i).iter().map(|v| v.to_string()));
            w.write_record(&row).map_err(err)?;
        }
    }
    w.flush().map_err(|e| MartingaleError::Csv(e.to_string()))
}

/// Reads a tree written by [`write_tree_csv`]; returns it with the atom ids.
pub fn read_tree_csv<R: Read>(
    reader: R,
) -> Result<(PaleyWalshMartingale, Vec<String>), MartingaleError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| MartingaleError::Csv(e.to_string()))?
        .clone();
    if headers.len() < 3 || &headers[0] != "level" || &headers[1] != "address" {
        return Err(MartingaleError::Csv(
            "header must be level,address,<atom ids>".into(),
        ));
    }
    let ids: Vec<String> = headers.iter().skip(2).map(str::to_owned).collect();
    let atoms = ids.len();
    let mut levels: Vec<Vec<Option<f64>>> = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let line = row + 2;
        let bad = |msg: &str| MartingaleError::Csv(format!("line {line}: {msg}"));
        let record = record.map_err(|e| bad(&e.to_string()))?;
        let k: usize = record[0]
            .parse()
            .map_err(|_| bad("level is not an integer"))?;
        if k > super::MAX_DEPTH {
            return Err(bad("level exceeds the maximal depth"));
        }
        let addr = &record[1];
        if addr.len() != k {
            return Err(bad("address length differs from level"));
        }
        let node = parse_address(addr).ok_or_else(|| bad("address must consist of + and -"))?;
        while levels.len() <= k {
            let len = (1usize << levels.len()) * atoms;
            levels.push(vec![None; len]);
        }
        for t in 0..atoms {
            let v: f64 = record[t + 2]
                .parse()
                .map_err(|_| bad("value is not a number"))?;
            let slot = &mut levels[k][node * atoms + t];
            if slot.is_some() {
                return Err(bad("duplicate node"));
            }
            *slot = Some(v);
        }
    }
    let levels = levels
        .into_iter()
        .enumerate()
        .map(|(k, level)| {
            level
                .into_iter()
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| MartingaleError::Csv(format!("level {k} is incomplete")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((PaleyWalshMartingale::from_levels(atoms, levels)?, ids))
}
