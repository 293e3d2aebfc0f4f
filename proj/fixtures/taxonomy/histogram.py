import numpy as np
import matplotlib.pyplot as plt
gray = np.array(image_clue_0.convert('L'))
plt.hist(gray.ravel(), bins=64)
plt.title('brightness')
plt.show()
