//! File names on the shared directory between clients and engine.

use crate::sample::ClientId;

/// `<client_id>_<seq>.csv`
pub fn ingest_file_name(client: &ClientId, seq: u64) -> String {
    format!("{client}_{seq}.csv")
}

/// `<client_id>_<window_id>.out`
pub fn result_file_name(client: &ClientId, window_id: u64) -> String {
    format!("{client}_{window_id}.out")
}

pub fn parse_result_file_name(name: &str) -> Option<(ClientId, u64)> {
    split_numbered(name.strip_suffix(".out")?)
}

pub fn parse_ingest_file_name(name: &str) -> Option<(ClientId, u64)> {
    split_numbered(name.strip_suffix(".csv")?)
}

/// Splits at the last `_`; the client id may contain underscores itself.
fn split_numbered(stem: &str) -> Option<(ClientId, u64)> {
    let (client, n) = stem.rsplit_once('_')?;
    if n.is_empty() || !n.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((ClientId::new(client).ok()?, n.parse().ok()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        let c = ClientId::new("ward_3-bed_12").unwrap();
        assert_eq!(
            parse_result_file_name(&result_file_name(&c, 29)),
            Some((c.clone(), 29))
        );
        assert_eq!(
            parse_ingest_file_name(&ingest_file_name(&c, 4)),
            Some((c, 4))
        );
        for bad in [
            "a_1.out.tmp",
            "a.out",
            "_1.out",
            "a_.out",
            "a_x.out",
            "a_1.csv",
        ] {
            assert!(parse_result_file_name(bad).is_none(), "{bad}");
        }
    }
}
