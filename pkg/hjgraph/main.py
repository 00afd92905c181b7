import typer

from hjgraph.commands import adjoint, audit, converge, solve

app = typer.Typer(
    name="hjgraph",
    help="Monotone schemes for Hamilton-Jacobi equations on graph Wasserstein space.",
    no_args_is_help=True,
    add_completion=False,
)

app.command(name="solve")(solve.solve)
app.command(name="adjoint")(adjoint.adjoint)
app.command(name="converge")(converge.converge)
app.command(name="audit")(audit.audit)


if __name__ == "__main__":
    app()
