"""Independent reference computations for the golden fixtures.

Nothing here imports the library's numerical code: each oracle recomputes
its expected values with explicit loops or a direct closed form. Scene
rendering is the one shared piece, used only to produce inputs.
"""
