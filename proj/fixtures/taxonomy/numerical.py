import numpy as np
arr = np.array(image_clue_0)
patch = arr[100:140, 60:120]
print('mean colour of the area:', patch.reshape(-1, 3).mean(axis=0))
