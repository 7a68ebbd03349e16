use alloc::vec::Vec;

use crate::agents::{ControlAssignment, RbAgent, TimetableAgent};
use crate::sim::{Command, Event, SimState};

/// One second of hierarchical control: timetable rules on their points, the
/// RB executor at RL stations, then the simulator step.
#[derive(Debug, Clone)]
pub struct Episode {
    pub sim: SimState,
    pub timetable: TimetableAgent,
    pub rb: RbAgent,
    pub assignment: ControlAssignment,
    cmds: Vec<Command>,
}

impl Episode {
    pub fn new(sim: SimState, timetable: TimetableAgent, rb: RbAgent, assignment: ControlAssignment) -> Episode {
        Episode { sim, timetable, rb, assignment, cmds: Vec::new() }
    }

    /// Advance one second; returns agent and simulator events in order.
    pub fn tick(&mut self) -> Vec<Event> {
        self.cmds.clear();
        let mut events = Vec::new();
        self.timetable.act(&self.sim, &self.assignment, &mut self.cmds);
        if self.assignment.rl_count() > 0 {
            self.rb.act(&self.sim, &self.assignment, &mut self.cmds, &mut events);
        }
        events.extend(self.sim.step(&self.cmds));
        self.timetable.observe(&events);
        self.rb.observe(&events);
        events
    }

    /// True once every train has left service.
    pub fn finished(&self) -> bool {
        self.sim.trains.iter().all(|t| !t.active)
    }
}
