//! Decentralized partition of a centralized design.

mod controller;
mod kt;
mod plant;

pub use controller::{
    assemble_tc, assemble_tc_ext, assemble_td, build_airframe_sub, build_lead, check_stability_condition,
    connect_airframe_sub, difference, extract_kee, kee_block, output_loop_tc, output_loop_td, strip_kt, DecentralizedController, KtFeedback,
    ReducedBlock, StabilityCheck,
};
pub use kt::{design_kt, KtDesign};
pub use plant::{
    assign_io, select_interface, truncate_states, InterfaceSelection, IoAssignment, PartitionDims,
    PartitionedPlant, PlantBlocks,
};
