//! UMLS knowledge-graph toolkit.
//!
//! Streams Metathesaurus RRF tables into an indexed concept graph, renders the
//! graph as text and as Neo4j import files, and answers yes/no/maybe questions
//! by grounding a chat-completion model in retrieved subgraphs.

pub mod build;
pub mod embed;
pub mod eval;
pub mod rag;
pub mod rrf;
pub mod store;
pub mod synth;
pub mod textualize;
