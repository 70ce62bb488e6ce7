"""Figure catalogue: which trace columns each figure plots and how.

Color conventions follow the simulation study this set reproduces: true
states x1 in blue and x2 in black, the delayed output in red, and every
estimate in red against its blue ground truth.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class SeriesSpec:
    column: str
    label: str
    color: str
    linestyle: str = "-"


@dataclass(frozen=True)
class FigureSpec:
    figure_id: int
    slug: str
    title: str
    ylabel: str
    series: tuple[SeriesSpec, ...]

    @property
    def required_columns(self) -> tuple[str, ...]:
        return ("t",) + tuple(s.column for s in self.series)


def _states_and_output(fid: int, flavor: str) -> FigureSpec:
    return FigureSpec(
        figure_id=fid,
        slug="states_output",
        title=f"State variables and delayed output ({flavor})",
        ylabel="states",
        series=(
            SeriesSpec("x1", r"$x_1$", "tab:blue"),
            SeriesSpec("x2", r"$x_2$", "black"),
            SeriesSpec("y", r"$y$", "tab:red"),
        ),
    )


def _prediction(fid: int, flavor: str) -> FigureSpec:
    return FigureSpec(
        figure_id=fid,
        slug="x2_prediction",
        title=f"Unmeasured state and its prediction ({flavor})",
        ylabel=r"$x_2$",
        series=(
            SeriesSpec("x2", r"$x_2$", "tab:blue"),
            SeriesSpec("x_hat2", r"$\hat{x}_2$", "tab:red", "--"),
        ),
    )


def _fault(fid: int, flavor: str) -> FigureSpec:
    return FigureSpec(
        figure_id=fid,
        slug="fault_reconstruction",
        title=f"Actuator fault and its reconstruction ({flavor})",
        ylabel=r"$d$",
        series=(
            SeriesSpec("d", r"$d$", "tab:blue"),
            SeriesSpec("d_hat", r"$\hat{d}$", "tab:red", "--"),
        ),
    )


FIGURES: dict[int, FigureSpec] = {
    1: _states_and_output(1, "nominal"),
    2: _prediction(2, "nominal"),
    3: _fault(3, "nominal"),
    4: FigureSpec(
        figure_id=4,
        slug="sliding_variable",
        title="Sliding variable",
        ylabel=r"$s$",
        series=(SeriesSpec("s", r"$s$", "tab:blue"),),
    ),
    5: FigureSpec(
        figure_id=5,
        slug="control_signal",
        title="Control signal",
        ylabel=r"$u$",
        series=(SeriesSpec("u", r"$u$", "tab:blue"),),
    ),
    6: _states_and_output(6, "uncertain"),
    7: _prediction(7, "uncertain"),
    8: _fault(8, "uncertain"),
}
