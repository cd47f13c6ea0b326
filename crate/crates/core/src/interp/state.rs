// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::ser::{Serialize, SerializeMap, Serializer};

use crate::ir::{Value, VarName, Width};

/// Machine state: variable bindings in insertion order, word-addressed
/// memory, and the pointer table consulted by `GetElemPtr`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CcdfgState {
    width: Width,
    bindings: Vec<(VarName, Value)>,
    pub memory: BTreeMap<u64, Value>,
    pub pointers: BTreeMap<VarName, u64>,
}

impl CcdfgState {
    pub fn new(width: Width) -> Self {
        CcdfgState {
            width,
            bindings: Vec::new(),
            memory: BTreeMap::new(),
            pointers: BTreeMap::new(),
        }
    }

    pub fn width(&self) -> Width {
        self.width
    }

    pub fn bindings(&self) -> &[(VarName, Value)] {
        &self.bindings
    }

    pub fn get(&self, name: &str) -> Option<Value> {
        self.bindings.iter().find(|(n, _)| n.as_str() == name).map(|(_, v)| *v)
    }

    /// Updates an existing binding in place, or appends a new one.
    pub fn set(&mut self, name: VarName, value: Value) {
        match self.bindings.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = value,
            None => self.bindings.push((name, value)),
        }
    }

    pub fn retain_bindings(&mut self, mut keep: impl FnMut(&VarName) -> bool) {
        self.bindings.retain(|(n, _)| keep(n));
    }

    pub fn sort_bindings(&mut self) {
        self.bindings.sort_by(|a, b| a.0.cmp(&b.0));
    }
}

impl Serialize for CcdfgState {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        struct Bindings<'a>(&'a [(VarName, Value)]);
        impl Serialize for Bindings<'_> {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                let mut map = serializer.serialize_map(Some(self.0.len()))?;
                for (k, v) in self.0 {
                    map.serialize_entry(k, v)?;
                }
                map.end()
            }
        }
        let mut map = serializer.serialize_map(Some(4))?;
        map.serialize_entry("width", &self.width.bits())?;
        map.serialize_entry("vars", &Bindings(&self.bindings))?;
        map.serialize_entry("mem", &self.memory)?;
        map.serialize_entry("ptrs", &self.pointers)?;
        map.end()
    }
}
