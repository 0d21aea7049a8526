//! Leak scan over serialized state.

use std::collections::HashSet;

/// A secret fragment found in the scanned bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Leak {
    /// Index of the secret in the input list.
    pub secret: usize,
    pub fragment: Vec<u8>,
}

/// Report the first secret sharing a substring of at least `min_len` bytes
/// with `haystack`. Any such substring contains a `min_len` window, so it is
/// enough to compare windows.
pub fn find_leak<S: AsRef<[u8]>>(haystack: &[u8], secrets: &[S], min_len: usize) -> Option<Leak> {
    assert!(min_len > 0);
    let windows: HashSet<&[u8]> = haystack.windows(min_len).collect();
    secrets.iter().enumerate().find_map(|(i, s)| {
        s.as_ref()
            .windows(min_len)
            .find(|w| windows.contains(w))
            .map(|w| Leak { secret: i, fragment: w.to_vec() })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_shared_window() {
        let leak = find_leak(b"{\"x\":\"abcdef\"}", &["zzzz", "xxcdefyy"], 4).unwrap();
        assert_eq!(leak.secret, 1);
        assert_eq!(leak.fragment, b"cdef");
        assert!(find_leak(b"abc", &["abc"], 4).is_none());
    }
}
