use super::LtError;

/// `n` equal-length source symbols stored contiguously.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceBlock {
    block_id: u32,
    symbol_size: usize,
    data: Vec<u8>,
}

impl SourceBlock {
    /// Wraps `data`, which must hold a whole number of symbols.
    pub fn new(block_id: u32, symbol_size: usize, data: Vec<u8>) -> Result<Self, LtError> {
        if symbol_size == 0 || data.is_empty() || !data.len().is_multiple_of(symbol_size) {
            return Err(LtError::InvalidParameter(format!(
                "block of {} bytes is not a positive multiple of symbol size {symbol_size}",
                data.len()
            )));
        }
        Ok(Self { block_id, symbol_size, data })
    }

    pub fn from_symbols(block_id: u32, symbols: Vec<Vec<u8>>) -> Result<Self, LtError> {
        let symbol_size = symbols.first().map_or(0, Vec::len);
        if symbols.iter().any(|s| s.len() != symbol_size) {
            return Err(LtError::InvalidParameter("symbols differ in length".into()));
        }
        Self::new(block_id, symbol_size, symbols.concat())
    }

    pub fn block_id(&self) -> u32 {
        self.block_id
    }

    pub fn symbol_size(&self) -> usize {
        self.symbol_size
    }

    pub fn n(&self) -> usize {
        self.data.len() / self.symbol_size
    }

    pub fn symbol(&self, i: usize) -> &[u8] {
        &self.data[i * self.symbol_size..(i + 1) * self.symbol_size]
    }

    pub fn symbols(&self) -> impl Iterator<Item = &[u8]> {
        self.data.chunks_exact(self.symbol_size)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }
}

/// What the receiver needs to undo segmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Manifest {
    /// Exact original length; the tail of the last block is zero padding.
    pub total_len: u64,
    pub block_count: u32,
}

/// Splits `data` into `ceil(len / (n * symbol_size))` zero-padded blocks.
pub fn segment_message(
    data: &[u8],
    n: usize,
    symbol_size: usize,
) -> Result<(Vec<SourceBlock>, Manifest), LtError> {
    let block_bytes = n * symbol_size;
    if block_bytes == 0 {
        return Err(LtError::InvalidParameter("n * symbol_size must be positive".into()));
    }
    if data.is_empty() {
        return Err(LtError::InvalidParameter("message is empty".into()));
    }
    let blocks: Vec<SourceBlock> = data
        .chunks(block_bytes)
        .enumerate()
        .map(|(id, chunk)| {
            let mut buf = chunk.to_vec();
            buf.resize(block_bytes, 0);
            SourceBlock { block_id: id as u32, symbol_size, data: buf }
        })
        .collect();
    let manifest = Manifest { total_len: data.len() as u64, block_count: blocks.len() as u32 };
    Ok((blocks, manifest))
}

/// Concatenates decoded blocks in id order and strips the padding.
pub fn reassemble<B: AsRef<[u8]>>(blocks: &[B], manifest: &Manifest) -> Result<Vec<u8>, LtError> {
    if blocks.len() != manifest.block_count as usize {
        return Err(LtError::InvalidParameter(format!(
            "expected {} blocks, got {}",
            manifest.block_count,
            blocks.len()
        )));
    }
    let mut out = Vec::with_capacity(blocks.iter().map(|b| b.as_ref().len()).sum());
    for b in blocks {
        out.extend_from_slice(b.as_ref());
    }
    if (out.len() as u64) < manifest.total_len {
        return Err(LtError::InvalidParameter("blocks shorter than manifest length".into()));
    }
    out.truncate(manifest.total_len as usize);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fit_has_no_padding() {
        let data = vec![7u8; 64 * 1024];
        let (blocks, m) = segment_message(&data, 64, 1024).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(m, Manifest { total_len: 65536, block_count: 1 });
        assert_eq!(blocks[0].as_bytes(), &data[..]);
    }

    #[test]
    fn one_byte_pads_a_full_block() {
        let (blocks, m) = segment_message(&[9], 64, 1024).unwrap();
        assert_eq!(m.total_len, 1);
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].as_bytes()[0], 9);
        assert_eq!(blocks[0].as_bytes()[1..].iter().filter(|&&b| b == 0).count(), 65535);
        let back = reassemble(&[blocks[0].as_bytes()], &m).unwrap();
        assert_eq!(back, vec![9]);
    }

    #[test]
    fn multi_megabyte_block_count() {
        // 9.42 MB test file: 9_877_389 bytes
        let len = 9_877_389usize;
        let expected = len.div_ceil(65536);
        assert_eq!(expected, 151);
        let data = vec![1u8; len];
        let (blocks, m) = segment_message(&data, 64, 1024).unwrap();
        assert_eq!(blocks.len(), expected);
        assert_eq!(m.block_count as usize, expected);
        let raw: Vec<&[u8]> = blocks.iter().map(|b| b.as_bytes()).collect();
        assert_eq!(reassemble(&raw, &m).unwrap(), data);
    }

    #[test]
    fn errors() {
        assert!(segment_message(&[1], 0, 1024).is_err());
        assert!(segment_message(&[1], 64, 0).is_err());
        assert!(segment_message(&[], 64, 16).is_err());
        assert!(SourceBlock::from_symbols(0, vec![vec![1, 2], vec![3]]).is_err());
    }
}
