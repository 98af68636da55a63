"""Analysis steps: polynomials, exact oracle, critical points, asymptotics and reports."""
