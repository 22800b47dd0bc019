//! Standard-library side of the toolkit: JSON reports, the fixture corpus
//! runner, the seeded program generator and the brute-force oracles used by
//! the acceptance suite.

pub mod corpus;
pub mod generate;
pub mod oracle;
pub mod report;
