# Nonlocality Frontier
# Bell/Svetlichny nonlocality versus mixedness for two- and three-qubit states
