from dataclasses import dataclass

import numpy as np

from models.field import frozen_array


@dataclass(frozen = True, eq = False)
class Trajectory:
    # Step indices n of the recorded states and their times t_n = n * h
    steps: np.ndarray
    times: np.ndarray
    states: tuple
    # Fixed-point iterations of every step taken (not only the recorded ones)
    iterations: np.ndarray
    h: float
    stride: int = 1

    def __post_init__(self):
        object.__setattr__(self, "steps", frozen_array(self.steps, dtype = int))
        object.__setattr__(self, "times", frozen_array(self.times, dtype = float))
        object.__setattr__(self, "iterations", frozen_array(self.iterations, dtype = int))
        object.__setattr__(self, "states", tuple(self.states))
        if len(self.states) != self.times.size:
            raise ValueError(f"{len(self.states)} states recorded for {self.times.size} times")

    def __len__(self):
        return len(self.states)

    def __getitem__(self, index):
        return self.states[index]

    def __iter__(self):
        return iter(self.states)

    @property
    def n_steps(self):
        return self.iterations.size

    @property
    def initial(self):
        return self.states[0]

    @property
    def final(self):
        return self.states[-1]

    @property
    def mean_iterations(self):
        return float(self.iterations.mean()) if self.iterations.size else 0.0
