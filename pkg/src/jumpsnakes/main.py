from jumpsnakes.base.noise import generate_noise
from jumpsnakes.fbsolve.picard import evaluate_cost, picard_solve
from jumpsnakes.model.factory import builtin_problem


def main() -> None:
    print("Hello from jumpsnakes!")
    problem = builtin_problem("lq_jump")
    noise = generate_noise(problem.grid(50), problem.markspace, n_paths=2000, seed=7)
    control = problem.oracle.control(noise.grid.knots[:-1])
    sol = picard_solve(problem, control[None, :].repeat(noise.n_paths, axis=0), noise)
    cost = evaluate_cost(sol)
    print(f"Example problem: {problem.name}, J(u_bar) = {cost.value:.4f} ± {cost.standard_error:.4f}")


if __name__ == "__main__":
    main()
