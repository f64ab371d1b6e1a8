from .metrics import compute_metrics
from .sim import (ABLATIONS, ACTIONS, AgentState, EpisodeResult, initial_state, run_episode,
                  select_frontier, sense, step)
from .world import GridWorld, WorldError, load_world, parse_world, shortest_path_length
