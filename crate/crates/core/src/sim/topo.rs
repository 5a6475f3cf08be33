//! Topology generators.
//!
//! Mesh switches are named `sRRR_CCC` and use ports 1 (north), 2 (east), 3 (south),
//! and 4 (west) for grid links; host ports start at 5. Each row has one host on its
//! first column (`hwRRR`, 10.0.x.y) and one on its last (`heRRR`, 10.1.x.y). A star
//! is switch `s0` with hosts `h1..hN` on ports `1..N`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::net::Ipv4Addr;

use crate::nskg::{LinkRecord, NodeRecord, PortRef};

pub const NORTH: u32 = 1;
pub const EAST: u32 = 2;
pub const SOUTH: u32 = 3;
pub const WEST: u32 = 4;
pub const FIRST_HOST_PORT: u32 = 5;

/// Generated nodes and links, plus the hosts in generation order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    pub nodes: Vec<NodeRecord>,
    pub links: Vec<LinkRecord>,
    pub hosts: Vec<String>,
}

pub fn mesh_switch(r: u32, c: u32) -> String {
    format!("s{r:03}_{c:03}")
}

fn row_ip(side: u8, r: u32) -> Ipv4Addr {
    Ipv4Addr::new(10, side, (r / 250) as u8, (r % 250 + 1) as u8)
}

/// A `rows × cols` grid with hosts on the first and last columns.
///
/// Panics if either dimension is zero or `rows` exceeds 62 500.
pub fn mesh(rows: u32, cols: u32) -> Topology {
    assert!(rows > 0 && cols > 0, "mesh dimensions must be positive");
    assert!(rows <= 62_500, "too many rows for the host address plan");
    let mut nodes = Vec::new();
    let mut links = Vec::new();
    let mut hosts = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            nodes.push(NodeRecord::switch(&mesh_switch(r, c)));
            if c + 1 < cols {
                links.push(LinkRecord::new(
                    PortRef::new(&mesh_switch(r, c), EAST),
                    PortRef::new(&mesh_switch(r, c + 1), WEST),
                ));
            }
            if r + 1 < rows {
                links.push(LinkRecord::new(
                    PortRef::new(&mesh_switch(r, c), SOUTH),
                    PortRef::new(&mesh_switch(r + 1, c), NORTH),
                ));
            }
        }
    }
    for r in 0..rows {
        let west = format!("hw{r:03}");
        let east = format!("he{r:03}");
        nodes.push(NodeRecord::host(&west, row_ip(0, r)));
        nodes.push(NodeRecord::host(&east, row_ip(1, r)));
        links.push(LinkRecord::new(PortRef::new(&west, 0), PortRef::new(&mesh_switch(r, 0), FIRST_HOST_PORT)));
        let east_port = if cols == 1 { FIRST_HOST_PORT + 1 } else { FIRST_HOST_PORT };
        links.push(LinkRecord::new(PortRef::new(&east, 0), PortRef::new(&mesh_switch(r, cols - 1), east_port)));
        hosts.push(west);
        hosts.push(east);
    }
    Topology { nodes, links, hosts }
}

/// One switch with `hosts` attached hosts.
///
/// Panics if `hosts` is zero or above 254.
pub fn star(hosts: u32) -> Topology {
    assert!((1..=254).contains(&hosts), "star needs 1..=254 hosts");
    let mut nodes = alloc::vec![NodeRecord::switch("s0")];
    let mut links = Vec::new();
    let mut names = Vec::new();
    for h in 1..=hosts {
        let name = format!("h{h}");
        nodes.push(NodeRecord::host(&name, Ipv4Addr::new(10, 0, 0, h as u8)));
        links.push(LinkRecord::new(PortRef::new(&name, 0), PortRef::new("s0", h)));
        names.push(name);
    }
    Topology { nodes, links, hosts: names }
}
