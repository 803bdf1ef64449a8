"""Pure mathematical services: polynomials, linear algebra and factorizations."""
