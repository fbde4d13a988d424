//! Length-prefixed field framing: each field is a big-endian `u32` length
//! followed by that many bytes.

#[derive(Debug, Default, Clone)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn raw(mut self, bytes: &[u8]) -> Self {
        self.buf.extend_from_slice(bytes);
        self
    }

    pub fn field(mut self, bytes: &[u8]) -> Self {
        let len = u32::try_from(bytes.len()).expect("field longer than u32::MAX");
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.extend_from_slice(bytes);
        self
    }

    pub fn u64(self, value: u64) -> Self {
        self.field(&value.to_be_bytes())
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// Zero-pad to `width`. Returns `None` if the content is already longer.
    pub fn padded(mut self, width: usize) -> Option<Vec<u8>> {
        if self.buf.len() > width {
            return None;
        }
        self.buf.resize(width, 0);
        Some(self.buf)
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

/// Cursor over framed bytes. Every accessor returns `None` on malformed
/// input instead of panicking.
#[derive(Debug, Clone)]
pub struct Reader<'a> {
    rest: &'a [u8],
}

impl<'a> Reader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { rest: bytes }
    }

    pub fn byte(&mut self) -> Option<u8> {
        let (&b, rest) = self.rest.split_first()?;
        self.rest = rest;
        Some(b)
    }

    pub fn field(&mut self) -> Option<&'a [u8]> {
        if self.rest.len() < 4 {
            return None;
        }
        let (len, rest) = self.rest.split_at(4);
        let len = u32::from_be_bytes(len.try_into().ok()?) as usize;
        if rest.len() < len {
            return None;
        }
        let (field, rest) = rest.split_at(len);
        self.rest = rest;
        Some(field)
    }

    pub fn fixed<const N: usize>(&mut self) -> Option<[u8; N]> {
        self.field()?.try_into().ok()
    }

    pub fn u64(&mut self) -> Option<u64> {
        self.fixed::<8>().map(u64::from_be_bytes)
    }

    pub fn rest(&self) -> &'a [u8] {
        self.rest
    }

    /// True when nothing but zero bytes remain.
    pub fn only_zero_padding(&self) -> bool {
        self.rest.iter().all(|&b| b == 0)
    }

    pub fn is_exhausted(&self) -> bool {
        self.rest.is_empty()
    }
}
