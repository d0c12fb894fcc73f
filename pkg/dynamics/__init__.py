# Tumor-immune delay model: equilibria, crossings, normal form, simulation
