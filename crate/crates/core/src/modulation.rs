//! Gray-coded square QAM mapping and minimum-distance detection.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModulationError {
    #[error("unknown constellation `{0}`")]
    UnknownConstellation(String),
    #[error("{bits} bits is not a multiple of {per_symbol} bits per symbol")]
    BitCount { bits: usize, per_symbol: usize },
    #[error("cannot detect an empty symbol stream")]
    Empty,
    #[error("reference has {reference} symbols, received has {received}")]
    LengthMismatch { reference: usize, received: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constellation {
    Qam16,
}

/// Gray-ordered amplitude levels on one axis, indexed by the two label bits.
const QAM16_LEVELS: [f64; 4] = [-3.0, -1.0, 3.0, 1.0];

impl Constellation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Constellation::Qam16 => 4,
        }
    }

    pub fn size(self) -> usize {
        1 << self.bits_per_symbol()
    }

    fn scale(self) -> f64 {
        match self {
            // mean of |a + jb|^2 over the +-1, +-3 grid is 10
            Constellation::Qam16 => 1.0 / 10f64.sqrt(),
        }
    }

    /// Constellation point carrying `label` (MSB first: two in-phase bits,
    /// then two quadrature bits).
    pub fn point(self, label: u8) -> Complex64 {
        let i = QAM16_LEVELS[usize::from((label >> 2) & 0b11)];
        let q = QAM16_LEVELS[usize::from(label & 0b11)];
        Complex64::new(i, q) * self.scale()
    }

    pub fn alphabet(self) -> Vec<Complex64> {
        (0..self.size() as u8).map(|l| self.point(l)).collect()
    }

    /// Label of the alphabet point closest to `z`.
    ///
    /// The square grid makes the Voronoi regions separable per axis, so
    /// slicing each axis is the same as a full minimum-distance search.
    pub fn slice(self, z: Complex64) -> u8 {
        let z = z / self.scale();
        (axis_label(z.re) << 2) | axis_label(z.im)
    }

    /// Half of the minimum distance between alphabet points.
    pub fn decision_radius(self) -> f64 {
        self.scale()
    }
}

fn axis_label(x: f64) -> u8 {
    let level = if x < -2.0 {
        -3.0
    } else if x < 0.0 {
        -1.0
    } else if x < 2.0 {
        1.0
    } else {
        3.0
    };
    QAM16_LEVELS.iter().position(|&l| l == level).unwrap() as u8
}

impl FromStr for Constellation {
    type Err = ModulationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "16qam" | "qam16" | "16-qam" => Ok(Constellation::Qam16),
            other => Err(ModulationError::UnknownConstellation(other.to_string())),
        }
    }
}

impl fmt::Display for Constellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constellation::Qam16 => f.write_str("16qam"),
        }
    }
}

/// Constellation symbols together with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolStream {
    pub constellation: Constellation,
    pub labels: Vec<u8>,
    pub symbols: Vec<Complex64>,
}

impl SymbolStream {
    pub fn from_labels(constellation: Constellation, labels: Vec<u8>) -> Self {
        let symbols = labels.iter().map(|&l| constellation.point(l)).collect();
        Self {
            constellation,
            labels,
            symbols,
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Symbols `range` as a new stream.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            constellation: self.constellation,
            labels: self.labels[range.clone()].to_vec(),
            symbols: self.symbols[range].to_vec(),
        }
    }
}

pub fn map_bits_to_symbols(
    bits: &[bool],
    constellation: Constellation,
) -> Result<SymbolStream, ModulationError> {
    let per_symbol = constellation.bits_per_symbol();
    if !bits.len().is_multiple_of(per_symbol) {
        return Err(ModulationError::BitCount {
            bits: bits.len(),
            per_symbol,
        });
    }
    let labels = bits
        .chunks(per_symbol)
        .map(|chunk| chunk.iter().fold(0u8, |acc, &b| (acc << 1) | u8::from(b)))
        .collect();
    Ok(SymbolStream::from_labels(constellation, labels))
}

pub fn random_bits<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<bool> {
    (0..n).map(|_| rng.random::<bool>()).collect()
}

/// Detection outcome: hard decisions and the symbol error count.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub decided: SymbolStream,
    pub errors: usize,
}

/// Minimum-distance detection of `received`, counting label mismatches
/// against `reference` when one is given.
pub fn detect_symbols(
    received: &[Complex64],
    constellation: Constellation,
    reference: Option<&SymbolStream>,
) -> Result<Detection, ModulationError> {
    if received.is_empty() {
        return Err(ModulationError::Empty);
    }
    let labels: Vec<u8> = received.iter().map(|&z| constellation.slice(z)).collect();
    let errors = match reference {
        Some(r) if r.len() != labels.len() => {
            return Err(ModulationError::LengthMismatch {
                reference: r.len(),
                received: labels.len(),
            })
        }
        Some(r) => r.labels.iter().zip(&labels).filter(|(a, b)| a != b).count(),
        None => 0,
    };
    Ok(Detection {
        decided: SymbolStream::from_labels(constellation, labels),
        errors,
    })
}
