"""End-to-end covering constructions built on the covering calculus."""
