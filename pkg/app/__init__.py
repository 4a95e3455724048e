# Distribution Learning
