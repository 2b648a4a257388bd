//! Exact q-characters of snake modules for the quantum affine algebras of
//! types A and B, together with S-system identities and the cluster
//! mutation sequences that realise prime snake modules.
//!
//! ```
//! use snakechar::{CartanData, Snake};
//!
//! let cd = CartanData::a(3);
//! let s: Snake = Snake::parse(&cd, "3_-3 3_-1").unwrap();
//! let chi = snakechar::snake_qchar(&s);
//! assert_eq!(chi.dominant_terms().len(), 1);
//! ```

pub mod cluster;
pub mod error;
pub mod identity;
pub mod monomial;
pub mod path;
pub mod sl2;
pub mod snake;
pub mod ssystem;

pub use error::{Error, Result};
pub use monomial::{a_monomial, leq, qc_div_exact, qc_mul, CartanData, Kind, Monomial, QCharacter};
pub use path::{snake_qchar, tsa_report};
pub use snake::{Point, Segment, Snake, SnakeSpec};
